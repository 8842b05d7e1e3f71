use squat_core::analysis::*;
use squat_core::dynamics::*;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn brockway_fixtures() {
    assert_eq!(brockway_power(0.0, 0.0, 80.0).unwrap(), 0.0);
    let p = brockway_power(1000.0, 900.0, 80.0).unwrap();
    assert!(close(p, 4.31875, 1e-12), "{p}");
    let doubled = brockway_power(2000.0, 1800.0, 80.0).unwrap();
    assert!(close(doubled, 2.0 * p, 1e-12));
    assert!(close(
        brockway_power(1000.0, 900.0, 40.0).unwrap(),
        2.0 * p,
        1e-12
    ));
    assert!(brockway_power(1000.0, 900.0, 0.0).is_err());
    assert!(brockway_power(1000.0, 900.0, -3.0).is_err());
    assert!(brockway_power(-1.0, 900.0, 80.0).is_err());
}

fn constant_trial(gross: f64, mass: f64, seconds: usize) -> Vec<MetabolicRecord> {
    // Pick VCO2 = 0.9·VO2 and solve the Brockway equation for VO2.
    let vo2 = gross * mass / (0.278 + 0.075 * 0.9);
    (0..=seconds)
        .map(|k| MetabolicRecord {
            t: k as f64,
            vo2,
            vco2: 0.9 * vo2,
            hr: Some(120.0 + (k % 3) as f64),
        })
        .collect()
}

#[test]
fn net_rate_fixtures() {
    let trial = constant_trial(5.816, 94.0, 180);
    let nmr = net_metabolic_rate(&trial, (60.0, 180.0), 1.71, 94.0).unwrap();
    assert!(close(nmr, 4.106, 1e-9), "{nmr}");
    let resting = net_metabolic_rate(&trial, (0.0, 180.0), 5.816, 94.0).unwrap();
    assert!(close(resting, 0.0, 1e-9));
    assert!(net_metabolic_rate(&trial, (170.0, 200.0), 1.71, 94.0).is_err());
    assert!(net_metabolic_rate(&trial, (10.2, 10.8), 1.71, 94.0).is_err());
    assert!(net_metabolic_rate(&[], (0.0, 1.0), 1.71, 94.0).is_err());
    assert_eq!(last_window(&trial, 120.0).unwrap(), (60.0, 180.0));
}

#[test]
fn window_bounds_are_inclusive() {
    let mut trial = constant_trial(4.0, 80.0, 10);
    trial[2].vo2 *= 2.0;
    trial[2].vco2 *= 2.0;
    let both = net_metabolic_rate(&trial, (2.0, 3.0), 0.0, 80.0).unwrap();
    assert!(close(both, 6.0, 1e-9), "{both}");
}

#[test]
fn heart_rate_window_mean() {
    let trial = constant_trial(4.0, 80.0, 8);
    let hr = mean_heart_rate(&trial, (0.0, 5.0)).unwrap();
    // 120, 121, 122, 120, 121, 122
    assert!(close(hr, 121.0, 1e-12));
    let mut gaps = trial.clone();
    for r in &mut gaps {
        r.hr = None;
    }
    assert!(mean_heart_rate(&gaps, (0.0, 5.0)).is_err());
}

#[test]
fn metabolic_csv_round_trip() {
    let text = "t_s,VO2_ml_min,VCO2_ml_min,HR_bpm\n0,1000,900,120\n1.5,1100,950,\n";
    let rows = read_metabolic_csv(text.as_bytes()).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1].hr, None);
    assert_eq!(rows[1].t, 1.5);
    let mut out = Vec::new();
    write_metabolic_csv(&rows, &mut out).unwrap();
    assert_eq!(read_metabolic_csv(out.as_slice()).unwrap(), rows);
    let bad = "t_s,VO2_ml_min,VCO2_ml_min,HR_bpm\n1,1000,900,120\n0,1000,900,120\n";
    assert!(read_metabolic_csv(bad.as_bytes()).is_err());
    let negative = "t_s,VO2_ml_min,VCO2_ml_min,HR_bpm\n0,-5,900,120\n";
    assert!(read_metabolic_csv(negative.as_bytes()).is_err());
}

#[test]
fn percent_change_fixtures() {
    assert_eq!(round_to(percent_change(4.303, 3.382).unwrap(), 1), 21.4);
    assert_eq!(percent_change(3.7, 3.7).unwrap(), 0.0);
    assert!(percent_change(0.0, 1.0).is_err());
    // Printed as -16.3; the listed values give -16.2445.
    let s1 = percent_change(4.106, 4.773).unwrap();
    assert!(close(s1, -16.2445, 1e-4), "{s1}");
}

fn table() -> Vec<SubjectRecord> {
    let row =
        |id: u32, h: f64, m: f64, hr: [Option<f64>; 3], nmr: [Option<f64>; 3], hr_valid: bool| {
            SubjectRecord {
                id,
                height: h,
                mass: m,
                hr,
                nmr,
                hr_valid,
            }
        };
    vec![
        row(
            1,
            1.78,
            94.0,
            [Some(146.0), Some(145.6), Some(139.2)],
            [Some(4.106), Some(4.773), Some(3.705)],
            true,
        ),
        row(
            2,
            1.84,
            98.3,
            [Some(115.0), Some(112.6), Some(110.7)],
            [Some(4.303), Some(4.571), Some(3.382)],
            true,
        ),
        row(
            3,
            1.80,
            102.3,
            [Some(118.2), Some(109.8), Some(123.7)],
            [Some(3.451), Some(3.060), Some(3.453)],
            true,
        ),
        row(
            4,
            1.52,
            73.0,
            [Some(79.1), Some(79.4), Some(86.1)],
            [Some(3.813), Some(3.670), Some(3.476)],
            false,
        ),
        row(
            5,
            1.70,
            64.65,
            [Some(118.7), Some(113.6), None],
            [Some(5.259), Some(4.279), None],
            true,
        ),
    ]
}

#[test]
fn summary_reproduces_the_mean_rows() {
    let s = summarize(&table()).unwrap();
    let cell = |c: Condition| s.condition(c);
    let zt = cell(Condition::ZeroTorque);
    let ne = cell(Condition::NoExo);
    let asst = cell(Condition::Assistance);
    assert_eq!(round_to(s.height.mean, 3), 1.728);
    assert_eq!(round_to(s.height.sd, 3), 0.127);
    assert_eq!(round_to(s.mass.mean, 2), 86.45);
    assert_eq!(round_to(s.mass.sd, 2), 16.62);

    let hr = |c: &ConditionSummary| c.hr.unwrap();
    let nmr = |c: &ConditionSummary| c.nmr.unwrap();
    assert_eq!(round_to(hr(zt).mean, 1), 124.5);
    assert_eq!(round_to(hr(zt).sd, 1), 14.4);
    assert_eq!(round_to(hr(ne).mean, 1), 120.4);
    assert_eq!(round_to(hr(ne).sd, 1), 16.9);
    assert_eq!(round_to(hr(asst).mean, 1), 124.5);
    assert_eq!(round_to(hr(asst).sd, 1), 14.3);
    assert_eq!(hr(asst).n, 3);
    assert_eq!(round_to(nmr(zt).mean, 3), 4.186);
    assert_eq!(round_to(nmr(zt).sd, 3), 0.680);
    assert_eq!(round_to(nmr(ne).mean, 3), 4.071);
    assert_eq!(round_to(nmr(ne).sd, 3), 0.702);
    assert_eq!(round_to(nmr(asst).mean, 3), 3.504);
    assert_eq!(round_to(nmr(asst).sd, 3), 0.140);
    assert_eq!(nmr(asst).n, 4);

    assert!(zt.hr_change.is_none() && zt.nmr_change.is_none());
    assert!(close(ne.hr_change.unwrap(), 3.45, 0.05));
    assert!(close(asst.hr_change.unwrap(), 1.23, 0.05));
    assert!(close(ne.nmr_change.unwrap(), 2.24, 0.05));
    assert!(close(asst.nmr_change.unwrap(), 9.98, 0.05));
    assert_eq!(asst.hr_excluded, vec![4, 5]);
    assert_eq!(asst.nmr_excluded, vec![5]);
    assert_eq!(ne.hr_excluded, vec![4]);
}

#[test]
fn subject_brackets() {
    let s = summarize(&table()).unwrap();
    let b = |id: u32| s.subjects.iter().find(|r| r.id == id).unwrap();
    assert_eq!(b(2).nmr_change[2].map(|v| round_to(v, 1)), Some(21.4));
    assert_eq!(b(3).hr_change[2].map(|v| round_to(v, 1)), Some(-4.7));
    assert_eq!(b(5).nmr_change[2], None);
    // Invalid heart-rate readings get no bracket.
    assert_eq!(b(4).hr_change[1], None);
    assert_eq!(b(4).nmr_change[1].map(|v| round_to(v, 1)), Some(3.8));
}

#[test]
fn summary_flags_empty_conditions() {
    let mut t = table();
    for r in &mut t {
        r.nmr[2] = None;
    }
    let s = summarize(&t).unwrap();
    let a = s.condition(Condition::Assistance);
    assert!(a.nmr.is_none());
    assert!(a.nmr_change.is_none());
    assert!(summarize(&[]).is_err());
}

#[test]
fn summary_csv_has_table_columns() {
    let s = summarize(&table()).unwrap();
    let mut out = Vec::new();
    write_summary_csv(&s, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "subject,height_m,mass_kg,hr_zero_torque,hr_no_exo,hr_assistance,nmr_zero_torque,nmr_no_exo,nmr_assistance"
    );
    assert!(text.contains("3.705 [9.8]"));
    assert!(text.contains("mean_sd,1.728 (0.127),86.45 (16.62)"));
    assert!(text.contains("3.504 (0.140)"));
    assert!(text.contains("mean_change,,,,3.44,1.25,,2.25,9.99"));
}

/// Knee trace of `cycles` cosine squats of `period` seconds peaking at `peak` rad.
fn cosine_squats(cycles: usize, period: f64, peak: f64) -> Vec<f64> {
    let n = (cycles as f64 * period * 100.0).round() as usize;
    (0..=n)
        .map(|k| {
            let t = k as f64 / 100.0;
            0.5 * peak * (1.0 - (2.0 * std::f64::consts::PI * t / period).cos())
        })
        .collect()
}

#[test]
fn segmentation_finds_every_cycle() {
    let trace = cosine_squats(10, 3.0, 2.0);
    let b = segment_cycles(&trace, 100.0);
    assert_eq!(b.len(), 11);
    for (k, idx) in b.iter().enumerate() {
        assert!((*idx as i64 - 300 * k as i64).abs() <= 1, "{k}: {idx}");
    }
    assert!(segment_cycles(&vec![0.05; 1000], 100.0).is_empty());
    let half: Vec<f64> = trace[..151].to_vec();
    assert!(segment_cycles(&half, 100.0).is_empty());
}

#[test]
fn shallow_dips_are_not_cycles() {
    // Peaks of 25° never cross the 30° threshold.
    let trace = cosine_squats(5, 3.0, 25f64.to_radians());
    assert!(segment_cycles(&trace, 100.0).is_empty());
}

#[test]
fn resampling_normalizes_time() {
    let slow = cosine_squats(3, 4.0, 2.0);
    let fast = cosine_squats(3, 2.0, 2.0);
    let a = resample_cycles(&slow, &segment_cycles(&slow, 100.0)).unwrap();
    let b = resample_cycles(&fast, &segment_cycles(&fast, 100.0)).unwrap();
    assert_eq!(a.mean.len(), 101);
    for i in 0..101 {
        assert!(close(a.mean[i], b.mean[i], 2e-3), "{i}");
        assert!(a.sd[i] < 1e-9);
    }
    assert!(close(a.mean[50], 2.0, 1e-3));
}

#[test]
fn two_cycle_mean_by_hand() {
    // Two ramps sharing the middle boundary: 0, 1, 2 then 2, 4, 6.
    let series = [0.0, 1.0, 2.0, 4.0, 6.0];
    let c = resample_cycles(&series, &[0, 2, 4]).unwrap();
    assert_eq!(c.cycles.len(), 2);
    assert!(close(c.mean[0], 1.0, 1e-12));
    assert!(close(c.mean[50], 2.5, 1e-12));
    assert!(close(c.mean[100], 4.0, 1e-12));
    // Sample SD of {1, 4}.
    assert!(close(c.sd[50], 3.0 / 2f64.sqrt(), 1e-12));
    assert!(resample_cycles(&series, &[0]).is_err());
    assert!(resample_cycles(&series, &[0, 9]).is_err());
    assert!(resample_cycles(&series, &[2, 2]).is_err());
}

#[test]
fn peak_flexion_of_generated_references() {
    let body = anthropometric_scale(1.73, 86.0).unwrap();
    for (knee, hip) in [(120.0, 95.0), (100.0, 75.0)] {
        let r = generate_reference(
            SquatDepth::from_degrees(knee, hip),
            DEFAULT_PERIOD,
            401,
            &body,
        )
        .unwrap();
        let ticks = 5 * 400;
        let k: Vec<f64> = (0..=ticks)
            .map(|i| r.sample_at_time(i as f64 * 0.01).q[KNEE])
            .collect();
        let h: Vec<f64> = (0..=ticks)
            .map(|i| r.sample_at_time(i as f64 * 0.01).q[HIP])
            .collect();
        let b = segment_cycles(&k, 100.0);
        assert_eq!(b.len(), 6);
        let pk = peak_flexion(&resample_cycles(&k, &b).unwrap());
        let ph = peak_flexion(&resample_cycles(&h, &b).unwrap());
        assert!(close(pk, knee, 0.5), "{pk}");
        assert!(close(ph, hip, 0.5), "{ph}");
    }
    let flat = resample_cycles(&[0.3; 10], &[0, 9]).unwrap();
    assert!(close(peak_flexion(&flat), 0.3f64.to_degrees(), 1e-9));
}

#[test]
fn curves_csv_layout() {
    let c = resample_cycles(&[0.0, 1.0, 2.0], &[0, 2]).unwrap();
    let mut out = Vec::new();
    write_curves_csv(&[("assist", &c)], &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "phase_pct,assist_mean_deg,assist_sd_deg"
    );
    assert_eq!(text.lines().count(), 102);
}

#[test]
fn manifest_reduces_files_and_values() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, rows: &[MetabolicRecord]| {
        let f = std::fs::File::create(dir.path().join(name)).unwrap();
        write_metabolic_csv(rows, f).unwrap();
    };
    write("rest.csv", &constant_trial(1.71, 94.0, 300));
    write("zt.csv", &constant_trial(5.816, 94.0, 180));
    let text = r#"
        [[subject]]
        id = 1
        height = 1.78
        mass = 94.0
        resting_file = "rest.csv"
        zero_torque = { file = "zt.csv" }
        no_exo = { hr = 145.6, nmr = 4.773 }

        [[subject]]
        id = 2
        height = 1.84
        mass = 98.3
        hr_valid = false
        zero_torque = { hr = 115.0, nmr = 4.303 }
    "#;
    let m = SubjectsManifest::from_toml(text).unwrap();
    let recs = m.records(dir.path()).unwrap();
    assert!(close(recs[0].nmr[0].unwrap(), 4.106, 1e-9));
    assert!(close(recs[0].hr[0].unwrap(), 121.0, 0.02));
    assert_eq!(recs[0].nmr[2], None);
    assert!(!recs[1].hr_valid);
    assert!(SubjectsManifest::from_toml(
        "[[subject]]\nid = 1\nheight = 1.7\nmass = 70\nbogus = 1\n"
    )
    .is_err());
}

mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn brockway_is_linear(vo2 in 0.0..5000.0f64, vco2 in 0.0..5000.0f64, k in 0.1..10.0f64, m in 20.0..200.0f64) {
            let p = brockway_power(vo2, vco2, m).unwrap();
            prop_assert!((brockway_power(k * vo2, k * vco2, m).unwrap() - k * p).abs() <= 1e-9 * (1.0 + p));
            prop_assert!((brockway_power(vo2, vco2, k * m).unwrap() - p / k).abs() <= 1e-9 * (1.0 + p));
        }

        #[test]
        fn segmentation_survives_time_scaling(cycles in 1usize..6, period in 1.5..4.0f64, s in 0.6..1.8f64) {
            let a = cosine_squats(cycles, period, 1.8);
            let b = cosine_squats(cycles, period * s, 1.8);
            let ba = segment_cycles(&a, 100.0);
            let bb = segment_cycles(&b, 100.0);
            prop_assert_eq!(ba.len(), cycles + 1);
            prop_assert_eq!(bb.len(), cycles + 1);
            let ra = resample_cycles(&a, &ba).unwrap();
            let rb = resample_cycles(&b, &bb).unwrap();
            // Each trace ends on the nearest sample, so its last boundary is
            // up to half a sample off; bound by the steepest slope.
            let half_sample = |p: f64| 0.5 / (100.0 * p);
            let tol = 0.9 * std::f64::consts::TAU * (half_sample(period) + half_sample(period * s));
            for k in 0..RESAMPLE_POINTS {
                prop_assert!((ra.mean[k] - rb.mean[k]).abs() <= tol);
            }
        }
    }
}
