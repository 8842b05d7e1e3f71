use std::io::{BufRead, BufReader, ErrorKind, Write};
use std::net::{IpAddr, Ipv4Addr, SocketAddr, TcpListener, TcpStream, UdpSocket};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use crossbeam_channel::{bounded, Receiver, RecvTimeoutError, Sender, TrySendError};
use thiserror::Error;

use crate::json::{command_from_json, state_json};
use crate::packet::{decode_command, encode_state, CommandPacket, StatePacket, COMMAND_LEN};

pub const COMMAND_PORT: u16 = 45001;
pub const STREAM_PORT: u16 = 45002;
pub const BRIDGE_PORT: u16 = 45080;

const POLL: Duration = Duration::from_millis(50);
const MAX_SUBSCRIBERS: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct TelemetryConfig {
    pub bind: IpAddr,
    /// UDP port for console commands; 0 picks a free port.
    pub command_port: u16,
    /// Fixed stream destinations. Peers that send commands are added.
    pub stream_targets: Vec<SocketAddr>,
    /// TCP port of the JSON bridge; `None` disables it.
    pub bridge_port: Option<u16>,
    /// Publish every n-th state handed to [`Telemetry::publish`].
    pub decimation: u32,
    /// Capacity of the command and stream queues.
    pub queue: usize,
}

impl Default for TelemetryConfig {
    fn default() -> Self {
        let local = IpAddr::V4(Ipv4Addr::LOCALHOST);
        Self {
            bind: local,
            command_port: COMMAND_PORT,
            stream_targets: vec![SocketAddr::new(local, STREAM_PORT)],
            bridge_port: Some(BRIDGE_PORT),
            decimation: 2,
            queue: 256,
        }
    }
}

#[derive(Debug, Error)]
pub enum TelemetryError {
    #[error("cannot bind {what} port {port}: {source}")]
    Bind {
        what: &'static str,
        port: u16,
        source: std::io::Error,
    },
    #[error("decimation must be at least 1")]
    Decimation,
}

/// A decoded command and when it arrived.
#[derive(Debug, Clone, Copy)]
pub struct Received {
    pub packet: CommandPacket,
    pub from: SocketAddr,
    pub at: Instant,
}

#[derive(Debug, Default)]
pub struct Counters {
    /// Malformed datagrams and bridge lines.
    pub malformed: AtomicU64,
    /// Valid commands dropped because the queue was full.
    pub overflow: AtomicU64,
    pub commands: AtomicU64,
    /// State packets sent, counted once per packet regardless of peers.
    pub published: AtomicU64,
    /// States dropped because the stream task fell behind.
    pub lagged: AtomicU64,
}

impl Counters {
    pub fn get(c: &AtomicU64) -> u64 {
        c.load(Ordering::Relaxed)
    }
}

/// Running endpoint. Dropping it stops the network tasks.
pub struct Telemetry {
    commands: Receiver<Received>,
    states: Sender<StatePacket>,
    counters: Arc<Counters>,
    stop: Arc<AtomicBool>,
    threads: Vec<JoinHandle<()>>,
    decimation: u32,
    offered: u64,
    stream_seq: u32,
    pub command_addr: SocketAddr,
    pub bridge_addr: Option<SocketAddr>,
}

fn bind_err(what: &'static str, port: u16) -> impl FnOnce(std::io::Error) -> TelemetryError {
    move |source| TelemetryError::Bind { what, port, source }
}

/// Binds the command socket, the stream socket and the bridge, and starts
/// their tasks.
pub fn serve(cfg: &TelemetryConfig) -> Result<Telemetry, TelemetryError> {
    if cfg.decimation == 0 {
        return Err(TelemetryError::Decimation);
    }
    let cmd_sock = UdpSocket::bind((cfg.bind, cfg.command_port))
        .map_err(bind_err("command", cfg.command_port))?;
    cmd_sock
        .set_read_timeout(Some(POLL))
        .map_err(bind_err("command", cfg.command_port))?;
    let command_addr = cmd_sock
        .local_addr()
        .map_err(bind_err("command", cfg.command_port))?;
    let stream_sock = UdpSocket::bind((cfg.bind, 0)).map_err(bind_err("stream", 0))?;
    let listener = match cfg.bridge_port {
        Some(port) => {
            let l = TcpListener::bind((cfg.bind, port)).map_err(bind_err("bridge", port))?;
            l.set_nonblocking(true).map_err(bind_err("bridge", port))?;
            Some(l)
        }
        None => None,
    };
    let bridge_addr = listener.as_ref().and_then(|l| l.local_addr().ok());

    let (cmd_tx, cmd_rx) = bounded::<Received>(cfg.queue);
    let (state_tx, state_rx) = bounded::<StatePacket>(cfg.queue);
    let (peer_tx, peer_rx) = bounded::<SocketAddr>(cfg.queue);
    let (client_tx, client_rx) = bounded::<TcpStream>(cfg.queue);
    let counters = Arc::new(Counters::default());
    let stop = Arc::new(AtomicBool::new(false));
    let mut threads = Vec::new();

    {
        let (counters, stop, cmd_tx) = (counters.clone(), stop.clone(), cmd_tx.clone());
        threads.push(std::thread::spawn(move || {
            command_task(cmd_sock, cmd_tx, peer_tx, &counters, &stop)
        }));
    }
    {
        let (counters, stop) = (counters.clone(), stop.clone());
        let targets = cfg.stream_targets.clone();
        threads.push(std::thread::spawn(move || {
            stream_task(
                stream_sock,
                targets,
                state_rx,
                peer_rx,
                client_rx,
                &counters,
                &stop,
            )
        }));
    }
    if let Some(listener) = listener {
        let (counters, stop) = (counters.clone(), stop.clone());
        threads.push(std::thread::spawn(move || {
            bridge_task(listener, client_tx, cmd_tx, counters, stop)
        }));
    }

    Ok(Telemetry {
        commands: cmd_rx,
        states: state_tx,
        counters,
        stop,
        threads,
        decimation: cfg.decimation,
        offered: 0,
        stream_seq: 0,
        command_addr,
        bridge_addr,
    })
}

impl Telemetry {
    /// Offers one control-tick snapshot; every `decimation`-th is streamed
    /// with the stream's own sequence number. Never blocks.
    pub fn publish(&mut self, mut p: StatePacket) {
        let due = self.offered.is_multiple_of(self.decimation as u64);
        self.offered += 1;
        if !due {
            return;
        }
        p.seq = self.stream_seq;
        self.stream_seq = self.stream_seq.wrapping_add(1);
        if let Err(TrySendError::Full(_)) = self.states.try_send(p) {
            self.counters.lagged.fetch_add(1, Ordering::Relaxed);
        }
    }

    pub fn commands(&self) -> &Receiver<Received> {
        &self.commands
    }

    pub fn counters(&self) -> &Counters {
        &self.counters
    }

    pub fn shutdown(mut self) {
        self.stop_tasks();
    }

    fn stop_tasks(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
    }
}

impl Drop for Telemetry {
    fn drop(&mut self) {
        self.stop_tasks();
    }
}

fn forward(packet: CommandPacket, from: SocketAddr, tx: &Sender<Received>, counters: &Counters) {
    counters.commands.fetch_add(1, Ordering::Relaxed);
    let r = Received {
        packet,
        from,
        at: Instant::now(),
    };
    if tx.try_send(r).is_err() {
        counters.overflow.fetch_add(1, Ordering::Relaxed);
    }
}

fn command_task(
    sock: UdpSocket,
    tx: Sender<Received>,
    peers: Sender<SocketAddr>,
    counters: &Counters,
    stop: &AtomicBool,
) {
    let mut buf = [0u8; 512];
    while !stop.load(Ordering::Relaxed) {
        let (n, from) = match sock.recv_from(&mut buf) {
            Ok(v) => v,
            Err(e) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => continue,
            Err(_) => continue,
        };
        let decoded = if n == COMMAND_LEN {
            decode_command(&buf[..n]).ok()
        } else {
            None
        };
        match decoded {
            Some(packet) => {
                let _ = peers.try_send(from);
                forward(packet, from, &tx, counters);
            }
            None => {
                counters.malformed.fetch_add(1, Ordering::Relaxed);
            }
        }
    }
}

fn stream_task(
    sock: UdpSocket,
    mut targets: Vec<SocketAddr>,
    states: Receiver<StatePacket>,
    peers: Receiver<SocketAddr>,
    clients: Receiver<TcpStream>,
    counters: &Counters,
    stop: &AtomicBool,
) {
    let fixed = targets.len();
    let mut bridge: Vec<TcpStream> = Vec::new();
    while !stop.load(Ordering::Relaxed) {
        for p in peers.try_iter() {
            if !targets.contains(&p) {
                if targets.len() >= fixed + MAX_SUBSCRIBERS {
                    targets.remove(fixed);
                }
                targets.push(p);
            }
        }
        bridge.extend(clients.try_iter());
        let state = match states.recv_timeout(POLL) {
            Ok(s) => s,
            Err(RecvTimeoutError::Timeout) => continue,
            Err(RecvTimeoutError::Disconnected) => break,
        };
        let bytes = encode_state(&state);
        for t in &targets {
            let _ = sock.send_to(&bytes, t);
        }
        if !bridge.is_empty() {
            let mut line = state_json(&state);
            line.push('\n');
            bridge.retain_mut(|c| c.write_all(line.as_bytes()).is_ok());
        }
        counters.published.fetch_add(1, Ordering::Relaxed);
    }
}

fn bridge_task(
    listener: TcpListener,
    clients: Sender<TcpStream>,
    tx: Sender<Received>,
    counters: Arc<Counters>,
    stop: Arc<AtomicBool>,
) {
    let mut readers = Vec::new();
    while !stop.load(Ordering::Relaxed) {
        match listener.accept() {
            Ok((conn, from)) => {
                let _ = conn.set_nonblocking(false);
                let _ = conn.set_nodelay(true);
                let _ = conn.set_write_timeout(Some(POLL));
                let _ = conn.set_read_timeout(Some(POLL));
                if let Ok(writer) = conn.try_clone() {
                    let _ = clients.try_send(writer);
                }
                let (tx, counters, stop) = (tx.clone(), counters.clone(), stop.clone());
                readers.push(std::thread::spawn(move || {
                    bridge_reader(conn, from, tx, &counters, &stop)
                }));
            }
            Err(e) if e.kind() == ErrorKind::WouldBlock => std::thread::sleep(POLL / 5),
            Err(_) => std::thread::sleep(POLL / 5),
        }
    }
    for r in readers {
        let _ = r.join();
    }
}

fn bridge_reader(
    conn: TcpStream,
    from: SocketAddr,
    tx: Sender<Received>,
    counters: &Counters,
    stop: &AtomicBool,
) {
    let mut reader = BufReader::new(conn);
    let mut line = String::new();
    while !stop.load(Ordering::Relaxed) {
        match reader.read_line(&mut line) {
            Ok(0) => break,
            Ok(_) => {
                let text = line.trim();
                if !text.is_empty() {
                    match command_from_json(text) {
                        Ok(packet) => forward(packet, from, &tx, counters),
                        Err(_) => {
                            counters.malformed.fetch_add(1, Ordering::Relaxed);
                        }
                    }
                }
                line.clear();
            }
            // A timeout may leave a partial line buffered; keep it.
            Err(e) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => {}
            Err(_) => break,
        }
    }
}
