use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpStream, UdpSocket};
use std::time::{Duration, Instant};

use squat_telemetry::*;

fn listener() -> (UdpSocket, SocketAddr) {
    let s = UdpSocket::bind("127.0.0.1:0").unwrap();
    s.set_read_timeout(Some(Duration::from_millis(500)))
        .unwrap();
    let a = s.local_addr().unwrap();
    (s, a)
}

fn config(target: SocketAddr) -> TelemetryConfig {
    TelemetryConfig {
        command_port: 0,
        stream_targets: vec![target],
        bridge_port: Some(0),
        ..TelemetryConfig::default()
    }
}

fn state(k: u32) -> StatePacket {
    StatePacket {
        mode: ControlMode::Assist,
        seq: k,
        t_ms: 10 * k as u64,
        angles: [k as f32 * 0.01; 4],
        scale: 0.5,
        ..StatePacket::default()
    }
}

fn wait_for<T>(mut f: impl FnMut() -> Option<T>) -> T {
    let end = Instant::now() + Duration::from_secs(2);
    loop {
        if let Some(v) = f() {
            return v;
        }
        assert!(Instant::now() < end, "timed out");
        std::thread::sleep(Duration::from_millis(5));
    }
}

#[test]
fn stream_is_decimated_and_sequenced() {
    let (rx, addr) = listener();
    let mut t = serve(&config(addr)).unwrap();
    for k in 0..100 {
        t.publish(state(k));
        std::thread::sleep(Duration::from_millis(1));
    }
    let mut buf = [0u8; 128];
    let mut got = Vec::new();
    while got.len() < 50 {
        let n = rx.recv(&mut buf).expect("stream packet");
        got.push(decode_state(&buf[..n]).unwrap());
    }
    for (i, p) in got.iter().enumerate() {
        assert_eq!(p.seq, i as u32);
        assert_eq!(p.t_ms, 20 * i as u64);
    }
    assert_eq!(Counters::get(&t.counters().published), 50);
}

#[test]
fn commands_are_forwarded_and_senders_subscribed() {
    let (_rx, addr) = listener();
    let mut t = serve(&config(addr)).unwrap();
    let console = UdpSocket::bind("127.0.0.1:0").unwrap();
    console
        .set_read_timeout(Some(Duration::from_millis(500)))
        .unwrap();
    let c = CommandPacket::set_scale(0.25, 11).unwrap();
    console
        .send_to(&encode_command(&c).unwrap(), t.command_addr)
        .unwrap();
    let r = t.commands().recv_timeout(Duration::from_secs(2)).unwrap();
    assert_eq!(r.packet, c);
    assert_eq!(r.from, console.local_addr().unwrap());
    // The console now receives the stream.
    let mut buf = [0u8; 128];
    let p = wait_for(|| {
        t.publish(state(1));
        t.publish(state(2));
        console
            .recv(&mut buf)
            .ok()
            .map(|n| decode_state(&buf[..n]).unwrap())
    });
    assert_eq!(p.mode, ControlMode::Assist);
}

#[test]
fn malformed_storm_is_counted_and_dropped() {
    let (_rx, addr) = listener();
    let t = serve(&config(addr)).unwrap();
    let s = UdpSocket::bind("127.0.0.1:0").unwrap();
    let mut bad = encode_command(&CommandPacket::heartbeat(0)).unwrap();
    bad[5] = 77;
    for i in 0..500u32 {
        match i % 4 {
            0 => s.send_to(&bad, t.command_addr).unwrap(),
            1 => s.send_to(&i.to_le_bytes(), t.command_addr).unwrap(),
            2 => s.send_to(&[0xff; 30], t.command_addr).unwrap(),
            _ => s.send_to(&[0u8; 200], t.command_addr).unwrap(),
        };
        // Paced so the kernel receive buffer never overflows.
        if i % 16 == 15 {
            std::thread::sleep(Duration::from_millis(2));
        }
    }
    s.send_to(
        &encode_command(&CommandPacket::estop(1)).unwrap(),
        t.command_addr,
    )
    .unwrap();
    let r = t.commands().recv_timeout(Duration::from_secs(2)).unwrap();
    assert_eq!(r.packet, CommandPacket::estop(1));
    assert_eq!(Counters::get(&t.counters().malformed), 500);
    assert!(t.commands().try_recv().is_err());
}

#[test]
fn bridge_mirrors_stream_and_accepts_commands() {
    let (rx, addr) = listener();
    let mut t = serve(&config(addr)).unwrap();
    let conn = TcpStream::connect(t.bridge_addr.unwrap()).unwrap();
    conn.set_read_timeout(Some(Duration::from_secs(2))).unwrap();
    let mut writer = conn.try_clone().unwrap();
    writeln!(writer, "{}", command_json(&CommandPacket::tag("start", 3))).unwrap();
    writeln!(writer, "garbage").unwrap();
    let r = t.commands().recv_timeout(Duration::from_secs(2)).unwrap();
    assert_eq!(r.packet.tag_text(), "start");
    wait_for(|| (Counters::get(&t.counters().malformed) == 1).then_some(()));

    // Give the stream task time to register the client.
    std::thread::sleep(Duration::from_millis(150));
    let sent = StatePacket {
        velocities: [0.1, -0.2, 0.3, -0.4],
        torque_cmd: [1.25, 1.25, -3.5, -3.5],
        ..state(7)
    };
    t.publish(sent);
    let mut buf = [0u8; 128];
    let n = rx.recv(&mut buf).unwrap();
    let binary = decode_state(&buf[..n]).unwrap();
    let mut line = String::new();
    BufReader::new(conn).read_line(&mut line).unwrap();
    let json = state_from_json(line.trim()).unwrap();
    assert_eq!(binary, json);
    assert_eq!(json.torque_cmd, sent.torque_cmd);
}

#[test]
fn port_conflict_names_the_port() {
    let taken = UdpSocket::bind("127.0.0.1:0").unwrap();
    let port = taken.local_addr().unwrap().port();
    let cfg = TelemetryConfig {
        command_port: port,
        bridge_port: None,
        ..TelemetryConfig::default()
    };
    let err = serve(&cfg).err().expect("port in use");
    assert!(err.to_string().contains(&port.to_string()), "{err}");
}
