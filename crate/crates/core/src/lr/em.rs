//! Expectation-maximization projection onto the local-realistic polytope.

use std::f64::consts::LN_2;

use nalgebra::{DMatrix, DVector};

use super::strategy::StrategySet;
use crate::error::{Error, Result};
use crate::photonic::ExperimentDistribution;

/// Stopping rule and acceleration switch for [`em_project`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmConfig {
    /// Stop once an update lowers the divergence by less than this (bits).
    pub tol: f64,
    /// Budget of EM sweeps.
    pub max_iter: usize,
    /// Also require the duality gap (bits) to drop below this bound.
    pub gap_tol: Option<f64>,
    /// Squared-extrapolation steps between plain EM updates. Extrapolated
    /// points are kept only when they do not raise the divergence.
    pub accelerate: bool,
    /// Finish with Newton steps on the strategies that carry weight, adding
    /// strategies while the duality gap stays open. Near the polytope
    /// boundary this turns the slow EM tail into machine precision.
    pub newton: bool,
    /// Keep the divergence after every accepted update in
    /// [`Projection::trace`].
    pub record_trace: bool,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 1_000_000,
            gap_tol: None,
            accelerate: true,
            newton: true,
            record_trace: false,
        }
    }
}

impl EmConfig {
    /// Unaccelerated EM with the default stopping rule and no Newton
    /// finish.
    pub fn plain() -> Self {
        Self {
            accelerate: false,
            newton: false,
            ..Self::default()
        }
    }
}

/// A local-realistic model: mixture weights over deterministic strategies
/// and the table they predict.
#[derive(Debug, Clone, PartialEq)]
pub struct LrModel {
    pub weights: Vec<f64>,
    /// Flat K×L table; row k sums to the probability of setting pair k.
    pub prediction: Vec<f64>,
}

impl LrModel {
    /// Prediction of `weights` under the setting probabilities of `q`.
    pub fn from_weights(
        strategies: &StrategySet,
        q: &ExperimentDistribution,
        weights: Vec<f64>,
    ) -> Result<Self> {
        check_weights(strategies, &weights)?;
        let mut prediction = vec![0.0; strategies.table_len()];
        predict(strategies, q.setting_probs(), &weights, &mut prediction);
        Ok(Self {
            weights,
            prediction,
        })
    }
}

fn check_weights(strategies: &StrategySet, weights: &[f64]) -> Result<()> {
    if weights.len() != strategies.len() {
        return Err(Error::Shape(format!(
            "{} weights for {} strategies",
            weights.len(),
            strategies.len()
        )));
    }
    if weights.iter().any(|&w| !(w >= 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        return Err(Error::Contract(
            "weights must form a probability vector".into(),
        ));
    }
    Ok(())
}

/// Result of a projection.
#[derive(Debug, Clone)]
pub struct Projection {
    pub model: LrModel,
    /// D(q‖p) in bits at the returned weights.
    pub divergence: f64,
    /// Upper bound (bits) on how far `divergence` lies above the minimum
    /// over the polytope, from the Frank-Wolfe duality gap.
    pub gap: f64,
    /// EM sweeps performed.
    pub iterations: usize,
    pub converged: bool,
    /// Divergence of every accepted iterate, starting with the initial
    /// weights, when requested.
    pub trace: Vec<f64>,
}

impl Projection {
    /// Certified lower bound on the minimum divergence.
    pub fn lower_bound(&self) -> f64 {
        (self.divergence - self.gap).max(0.0)
    }
}

fn predict(strategies: &StrategySet, setting_probs: &[f64], weights: &[f64], out: &mut [f64]) {
    out.fill(0.0);
    let k = strategies.setting_pairs();
    for (cells, &w) in strategies.all_cells().chunks_exact(k).zip(weights) {
        for (&c, &sp) in cells.iter().zip(setting_probs) {
            out[c as usize] += w * sp;
        }
    }
}

/// Divergence, EM multipliers and duality gap at one weight vector.
#[derive(Clone)]
struct Evaluation {
    divergence: f64,
    gap: f64,
    multipliers: Vec<f64>,
    prediction: Vec<f64>,
}

struct Workspace<'a> {
    strategies: &'a StrategySet,
    q: &'a [f64],
    setting_probs: &'a [f64],
    row_len: usize,
    ratio: Vec<f64>,
    sweeps: usize,
}

impl<'a> Workspace<'a> {
    fn evaluate(&mut self, weights: &[f64], out: &mut Evaluation) {
        self.sweeps += 1;
        predict(
            self.strategies,
            self.setting_probs,
            weights,
            &mut out.prediction,
        );
        let mut nats = 0.0;
        for (row, (qrow, prow)) in self
            .q
            .chunks_exact(self.row_len)
            .zip(out.prediction.chunks_exact(self.row_len))
            .enumerate()
        {
            let sp = self.setting_probs[row];
            let rrow = &mut self.ratio[row * self.row_len..(row + 1) * self.row_len];
            for ((r, &qc), &pc) in rrow.iter_mut().zip(qrow).zip(prow) {
                if qc > 0.0 {
                    let x = qc / pc;
                    *r = sp * x;
                    nats += qc * x.ln();
                } else {
                    *r = 0.0;
                }
            }
        }
        let k = self.strategies.setting_pairs();
        let mut max_mult = 0.0_f64;
        for (m, cells) in out
            .multipliers
            .iter_mut()
            .zip(self.strategies.all_cells().chunks_exact(k))
        {
            *m = cells.iter().map(|&c| self.ratio[c as usize]).sum();
            max_mult = max_mult.max(*m);
        }
        out.divergence = if nats.is_nan() {
            f64::INFINITY
        } else {
            (nats / LN_2).max(0.0)
        };
        out.gap = ((max_mult - 1.0) / LN_2).max(0.0);
    }

    fn blank(&self) -> Evaluation {
        Evaluation {
            divergence: f64::INFINITY,
            gap: f64::INFINITY,
            multipliers: vec![0.0; self.strategies.len()],
            prediction: vec![0.0; self.strategies.table_len()],
        }
    }
}

/// One EM update w ← w ⊙ m, renormalized against rounding.
fn em_step(weights: &[f64], eval: &Evaluation, out: &mut [f64]) {
    let mut total = 0.0;
    for ((o, &w), &m) in out.iter_mut().zip(weights).zip(&eval.multipliers) {
        *o = w * m;
        total += *o;
    }
    out.iter_mut().for_each(|o| *o /= total);
}

const NEWTON_ROUNDS: usize = 100;
const NEWTON_STEPS: usize = 100;
const NEWTON_MAX_ACTIVE: usize = 256;
/// Multiplier margin for keeping a weighted strategy in the first active set.
const ACTIVE_MARGIN: f64 = 1e-6;
const GAP_CLOSED: f64 = 1e-13;
/// Relative eigenvalue floor separating the curvature from directions that
/// only move mass between unobserved cells.
const EIGEN_FLOOR: f64 = 1e-11;

/// Fully corrective Newton finish from an EM iterate: Newton steps on the
/// active strategies, dropping those that reach zero weight and adding the
/// most violated one while the duality gap is open. Returns the best point
/// visited, which may be the starting point.
fn newton_finish(ws: &mut Workspace, w: &[f64], e: &Evaluation) -> (Vec<f64>, Evaluation) {
    let n = w.len();
    let mut member = vec![false; n];
    let mut x = vec![0.0; n];
    for s in 0..n {
        if w[s] > 0.0 && e.multipliers[s] > 1.0 - ACTIVE_MARGIN {
            member[s] = true;
            x[s] = w[s];
        }
    }
    let total: f64 = x.iter().sum();
    let mut ex = ws.blank();
    if total > 0.0 {
        x.iter_mut().for_each(|v| *v /= total);
        ws.evaluate(&x, &mut ex);
    }
    if !ex.divergence.is_finite() {
        // the pruned support misses observed cells
        return (w.to_vec(), e.clone());
    }
    let mut trial = vec![0.0; n];
    let mut et = ws.blank();
    'rounds: for _ in 0..NEWTON_ROUNDS {
        for _ in 0..NEWTON_STEPS {
            let active: Vec<usize> = (0..n).filter(|&s| member[s]).collect();
            if active.len() > NEWTON_MAX_ACTIVE {
                break 'rounds;
            }
            let Some(d) = newton_direction(ws, &active, &ex) else {
                break;
            };
            // directional derivative of the divergence in nats
            let slope: f64 = -active
                .iter()
                .zip(&d)
                .map(|(&s, &ds)| ex.multipliers[s] * ds)
                .sum::<f64>();
            if !(slope < 0.0) {
                break;
            }
            let mut limit = 1.0;
            let mut blocking = None;
            for (&s, &ds) in active.iter().zip(&d) {
                if ds < 0.0 && -x[s] / ds <= limit {
                    limit = -x[s] / ds;
                    blocking = Some(s);
                }
            }
            let before = ex.divergence * LN_2;
            let mut t = limit;
            let mut moved = false;
            while t > 1e-10 * limit {
                trial.copy_from_slice(&x);
                for (&s, &ds) in active.iter().zip(&d) {
                    trial[s] = (x[s] + t * ds).max(0.0);
                }
                if t == limit {
                    if let Some(s) = blocking {
                        trial[s] = 0.0;
                    }
                }
                let sum: f64 = trial.iter().sum();
                trial.iter_mut().for_each(|v| *v /= sum);
                ws.evaluate(&trial, &mut et);
                let after = et.divergence * LN_2;
                // sufficient decrease, or no change beyond rounding when the
                // predicted gain is itself below what the sum can resolve
                if after <= before + 1e-4 * t * slope
                    || (-slope < 1e-15 && after <= before + 4.0 * f64::EPSILON * before)
                {
                    moved = true;
                    break;
                }
                t *= 0.5;
            }
            if !moved {
                break;
            }
            std::mem::swap(&mut x, &mut trial);
            std::mem::swap(&mut ex, &mut et);
            for s in 0..n {
                member[s] &= x[s] > 0.0;
            }
            let worst = (0..n)
                .filter(|&s| member[s])
                .map(|s| (ex.multipliers[s] - 1.0).abs())
                .fold(0.0, f64::max);
            if worst < GAP_CLOSED {
                break;
            }
        }
        let entering = (0..n)
            .filter(|&s| !member[s])
            .max_by(|&a, &b| ex.multipliers[a].total_cmp(&ex.multipliers[b]));
        match entering {
            Some(s) if ex.multipliers[s] > 1.0 + GAP_CLOSED => member[s] = true,
            _ => break 'rounds,
        }
    }
    if ex.divergence < e.divergence {
        (x, ex)
    } else {
        (w.to_vec(), e.clone())
    }
}

/// Newton step for the divergence (nats) over the `active` weights with
/// their total held fixed, restricted to directions that change the
/// predicted table on observed cells.
fn newton_direction(ws: &Workspace, active: &[usize], e: &Evaluation) -> Option<Vec<f64>> {
    let m = active.len();
    if m < 2 {
        return None;
    }
    let k = ws.strategies.setting_pairs();
    let mut h = DMatrix::<f64>::zeros(m, m);
    for row in 0..k {
        let sp = ws.setting_probs[row];
        for (i, &s) in active.iter().enumerate() {
            let cs = ws.strategies.cells(s)[row] as usize;
            let qc = ws.q[cs];
            if qc == 0.0 {
                continue;
            }
            let curvature = sp * sp * qc / (e.prediction[cs] * e.prediction[cs]);
            for (j, &t) in active.iter().enumerate().skip(i) {
                if ws.strategies.cells(t)[row] as usize == cs {
                    h[(i, j)] += curvature;
                    if j != i {
                        h[(j, i)] += curvature;
                    }
                }
            }
        }
    }
    let eigen = h.symmetric_eigen();
    let top = eigen.eigenvalues.iter().cloned().fold(0.0, f64::max);
    if !(top > 0.0) {
        return None;
    }
    let r = DVector::from_iterator(m, active.iter().map(|&s| e.multipliers[s]));
    let ones = DVector::from_element(m, 1.0);
    let rho = eigen.eigenvectors.tr_mul(&r);
    let u = eigen.eigenvectors.tr_mul(&ones);
    // minimize ½ zᵀΛz − ρᵀz subject to uᵀz = 0 on the kept eigenvalues
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..m {
        let l = eigen.eigenvalues[i];
        if l > EIGEN_FLOOR * top {
            num += rho[i] * u[i] / l;
            den += u[i] * u[i] / l;
        }
    }
    let nu = if den > 0.0 { num / den } else { 0.0 };
    let mut z = DVector::zeros(m);
    for i in 0..m {
        let l = eigen.eigenvalues[i];
        if l > EIGEN_FLOOR * top {
            z[i] = (rho[i] - nu * u[i]) / l;
        }
    }
    let d = &eigen.eigenvectors * z;
    d.iter()
        .all(|v| v.is_finite())
        .then(|| d.iter().copied().collect())
}

/// Minimizes D(q‖p) over local-realistic predictions p, starting from
/// uniform weights.
pub fn em_project(
    q: &ExperimentDistribution,
    strategies: &StrategySet,
    config: &EmConfig,
) -> Result<Projection> {
    let n = strategies.len();
    em_project_from(q, strategies, vec![1.0 / n as f64; n], config)
}

/// [`em_project`] from given initial weights. Strategies with zero initial
/// weight stay at zero.
pub fn em_project_from(
    q: &ExperimentDistribution,
    strategies: &StrategySet,
    init: Vec<f64>,
    config: &EmConfig,
) -> Result<Projection> {
    if strategies.table_len() != q.table().len() {
        return Err(Error::Shape("strategy set does not match the table".into()));
    }
    if !(config.tol > 0.0) {
        return Err(Error::Contract("EM tolerance must be positive".into()));
    }
    check_weights(strategies, &init)?;
    let mut ws = Workspace {
        strategies,
        q: q.table(),
        setting_probs: q.setting_probs(),
        row_len: q.joint_outcomes(),
        ratio: vec![0.0; q.table().len()],
        sweeps: 0,
    };
    let n = strategies.len();
    let mut w0 = init;
    let mut e0 = ws.blank();
    ws.evaluate(&w0, &mut e0);
    if !e0.divergence.is_finite() {
        return Err(Error::Contract(
            "experiment has mass outside the span of the initial weights".into(),
        ));
    }
    let mut w1 = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let mut wx = vec![0.0; n];
    let mut e1 = ws.blank();
    let mut e2 = ws.blank();
    let mut ex = ws.blank();
    let mut trace = Vec::new();
    if config.record_trace {
        trace.push(e0.divergence);
    }
    let converged;
    loop {
        if e0.gap == 0.0 || ws.sweeps > config.max_iter {
            converged = e0.gap == 0.0;
            break;
        }
        let before = e0.divergence;
        em_step(&w0, &e0, &mut w1);
        ws.evaluate(&w1, &mut e1);
        if !config.accelerate {
            std::mem::swap(&mut w0, &mut w1);
            std::mem::swap(&mut e0, &mut e1);
        } else {
            em_step(&w1, &e1, &mut w2);
            ws.evaluate(&w2, &mut e2);
            // squared extrapolation along r = w1 − w0, v = w2 − 2w1 + w0
            let (mut rr, mut vv) = (0.0, 0.0);
            for i in 0..n {
                let r = w1[i] - w0[i];
                let v = w2[i] - 2.0 * w1[i] + w0[i];
                rr += r * r;
                vv += v * v;
            }
            let mut alpha = if vv > 0.0 { -(rr / vv).sqrt() } else { -1.0 };
            alpha = alpha.min(-1.0);
            let mut accepted = false;
            while alpha < -1.0 {
                let mut ok = true;
                let mut total = 0.0;
                for i in 0..n {
                    let r = w1[i] - w0[i];
                    let v = w2[i] - 2.0 * w1[i] + w0[i];
                    let x = w0[i] - 2.0 * alpha * r + alpha * alpha * v;
                    if !(x > 0.0) && w0[i] > 0.0 {
                        ok = false;
                        break;
                    }
                    wx[i] = x.max(0.0);
                    total += wx[i];
                }
                if ok {
                    wx.iter_mut().for_each(|x| *x /= total);
                    ws.evaluate(&wx, &mut ex);
                    if ex.divergence <= e2.divergence {
                        accepted = true;
                    }
                    break;
                }
                alpha = (alpha - 1.0) / 2.0;
                if alpha > -1.0 + 1e-3 {
                    break;
                }
            }
            if accepted {
                std::mem::swap(&mut w0, &mut wx);
                std::mem::swap(&mut e0, &mut ex);
            } else {
                std::mem::swap(&mut w0, &mut w2);
                std::mem::swap(&mut e0, &mut e2);
            }
        }
        if config.record_trace {
            trace.push(e0.divergence);
        }
        let gap_ok = config.gap_tol.map_or(true, |t| e0.gap < t);
        if before - e0.divergence < config.tol && gap_ok {
            converged = true;
            break;
        }
    }
    if config.newton && e0.gap > 0.0 {
        let (w, e) = newton_finish(&mut ws, &w0, &e0);
        if e.divergence < e0.divergence {
            w0 = w;
            e0 = e;
            if config.record_trace {
                trace.push(e0.divergence);
            }
        }
    }
    let Evaluation {
        divergence,
        gap,
        prediction,
        ..
    } = e0;
    Ok(Projection {
        model: LrModel {
            weights: w0,
            prediction,
        },
        divergence,
        gap,
        iterations: ws.sweeps,
        converged,
        trace,
    })
}
