use serde::{Deserialize, Serialize};

use super::lattice::{weighted_norm, LatticeField, NoisePath, NormKind, SpdeConfig, Stepper};
use crate::error::Result;
use crate::numerics::linear_fit;
use crate::potentials::PotentialSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingReport {
    pub times: Vec<f64>,
    /// `‖X¹_t − X²_t‖_E / (e^{(−K₁+2r²)t/2} ‖w₁ − w₂‖_E)`
    pub ratio_e: Vec<f64>,
    /// `‖X¹_t − X²_t‖_H / (e^{−K₁t/2} ‖w₁ − w₂‖_H)`
    pub ratio_h: Vec<f64>,
    pub max_ratio_e: f64,
    pub max_ratio_h: f64,
    /// `−d/dt log ‖X¹_t − X²_t‖_H` fitted on the stored times with `t ≥ 1`
    pub observed_rate_h: Option<f64>,
    pub tol: f64,
    pub pass: bool,
}

/// Runs two copies from `w1`, `w2` with the same noise and compares their
/// distance with the contraction envelopes. Discretization slack is
/// `5(dt + h²)`.
pub fn coupling_test(
    w1: &LatticeField,
    w2: &LatticeField,
    spec: &PotentialSpec,
    config: &SpdeConfig,
    noise: &NoisePath,
) -> Result<CouplingReport> {
    let d0 = w1.difference(w2)?;
    noise.check_run(config, w1)?;
    let k1 = spec.k1;
    let r = config.weight.r;
    let e0 = weighted_norm(&d0, &config.weight, NormKind::E);
    let h0 = weighted_norm(&d0, &config.weight, NormKind::H);
    let ratio = |num: f64, den: f64| {
        if den > 0.0 {
            num / den
        } else if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    };

    let mut s1 = Stepper::new(spec, config, w1.geometry())?;
    let mut s2 = Stepper::new(spec, config, w2.geometry())?;
    let (mut x1, mut x2) = (w1.values.clone(), w2.values.clone());
    let mut inc = vec![0.0; w1.n_sites];
    let mut cursor = noise.cursor();
    let mut report = CouplingReport {
        times: vec![0.0],
        ratio_e: vec![ratio(e0, e0)],
        ratio_h: vec![ratio(h0, h0)],
        max_ratio_e: 0.0,
        max_ratio_h: 0.0,
        observed_rate_h: None,
        tol: 5.0 * (config.dt + w1.spacing * w1.spacing),
        pass: false,
    };
    let mut log_h = vec![(0.0, h0.ln())];
    let n = config.n_steps();
    let mut diff = d0;
    for k in 1..=n {
        cursor.next_into(&mut inc);
        s1.advance(&mut x1, &inc)?;
        s2.advance(&mut x2, &inc)?;
        if k % config.output_every != 0 && k != n {
            continue;
        }
        let t = k as f64 * config.dt;
        for ((d, a), b) in diff.values.iter_mut().zip(&x1).zip(&x2) {
            *d = a - b;
        }
        let e = weighted_norm(&diff, &config.weight, NormKind::E);
        let h = weighted_norm(&diff, &config.weight, NormKind::H);
        report.times.push(t);
        report.ratio_e.push(ratio(e, ((-k1 + 2.0 * r * r) * t / 2.0).exp() * e0));
        report.ratio_h.push(ratio(h, (-k1 * t / 2.0).exp() * h0));
        if h > 0.0 {
            log_h.push((t, h.ln()));
        }
    }
    report.max_ratio_e = report.ratio_e.iter().cloned().fold(0.0, f64::max);
    report.max_ratio_h = report.ratio_h.iter().cloned().fold(0.0, f64::max);
    let late: Vec<&(f64, f64)> = log_h.iter().filter(|(t, _)| *t >= 1.0).collect();
    if late.len() >= 2 {
        let ts: Vec<f64> = late.iter().map(|p| p.0).collect();
        let ls: Vec<f64> = late.iter().map(|p| p.1).collect();
        report.observed_rate_h = Some(-linear_fit(&ts, &ls).1);
    }
    report.pass = report.max_ratio_e <= 1.0 + report.tol && report.max_ratio_h <= 1.0 + report.tol;
    Ok(report)
}
