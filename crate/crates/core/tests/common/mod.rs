//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use bell_strength::photonic::{
    DetectorKind, FockState, MeasurementSetting, Settings, CLICK_LABELS, COUNT_LABELS,
};
use num_complex::Complex64;

/// Occupations 0..=2 of the four modes (A_H, A_V, B_H, B_V), base-3 digits.
const DIM: usize = 81;

fn digits(index: usize) -> [usize; 4] {
    [index / 27, index / 9 % 3, index / 3 % 3, index % 3]
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn permanent(m: &[Vec<Complex64>]) -> Complex64 {
    let n = m.len();
    if n == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let mut total = Complex64::default();
    let mut perm: Vec<usize> = (0..n).collect();
    permute(&mut perm, 0, &mut |p| {
        total += p
            .iter()
            .enumerate()
            .map(|(i, &j)| m[i][j])
            .product::<Complex64>();
    });
    total
}

fn permute(p: &mut Vec<usize>, k: usize, visit: &mut dyn FnMut(&[usize])) {
    if k == p.len() {
        visit(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permute(p, k + 1, visit);
        p.swap(k, i);
    }
}

/// Fock-space matrix ⟨m_r, m_t| U |n_H, n_V⟩ of one analyzer, from the
/// single-photon map a_X† → Σ_p ⟨p|X⟩ c_p† through permanents of repeated
/// rows and columns. Indexed `[3·m_r + m_t][3·n_H + n_V]`.
fn party_unitary(setting: &MeasurementSetting) -> Vec<Vec<Complex64>> {
    let ports = setting.port_states();
    let single = |p: usize, x: usize| ports[p][x].conj();
    let mut u = vec![vec![Complex64::default(); 9]; 9];
    for out in 0..9 {
        let (mr, mt) = (out / 3, out % 3);
        for inp in 0..9 {
            let (nh, nv) = (inp / 3, inp % 3);
            if mr + mt != nh + nv {
                continue;
            }
            let rows: Vec<usize> = [0].repeat(mr).into_iter().chain([1].repeat(mt)).collect();
            let cols: Vec<usize> = [0].repeat(nh).into_iter().chain([1].repeat(nv)).collect();
            let sub: Vec<Vec<Complex64>> = rows
                .iter()
                .map(|&p| cols.iter().map(|&x| single(p, x)).collect())
                .collect();
            let norm = (factorial(mr) * factorial(mt) * factorial(nh) * factorial(nv)).sqrt();
            u[out][inp] = permanent(&sub) / norm;
        }
    }
    u
}

/// Joint port-count probabilities over the dense 81-state output basis.
fn dense_counts(state: &FockState, a: &MeasurementSetting, b: &MeasurementSetting) -> Vec<f64> {
    let mut psi = vec![Complex64::default(); DIM];
    for &(occ, amp) in state.terms() {
        let idx = occ.iter().fold(0, |acc, &n| acc * 3 + n as usize);
        psi[idx] += amp;
    }
    let ua = party_unitary(a);
    let ub = party_unitary(b);
    // full operator on the 4-mode basis as the Kronecker product
    let mut out = vec![Complex64::default(); DIM];
    for (o, slot) in out.iter_mut().enumerate() {
        let od = digits(o);
        for (i, &amp) in psi.iter().enumerate() {
            if amp == Complex64::default() {
                continue;
            }
            let id = digits(i);
            *slot += ua[od[0] * 3 + od[1]][id[0] * 3 + id[1]]
                * ub[od[2] * 3 + od[3]][id[2] * 3 + id[3]]
                * amp;
        }
    }
    out.iter().map(|z| z.norm_sqr()).collect()
}

/// Probability that `n` photons leave `k` registered, by enumerating which
/// photons survive.
fn survive(n: usize, k: usize, eta: f64) -> f64 {
    (0..1u32 << n)
        .filter(|mask| mask.count_ones() as usize == k)
        .map(|mask| {
            (0..n)
                .map(|i| if mask >> i & 1 == 1 { eta } else { 1.0 - eta })
                .product::<f64>()
        })
        .sum()
}

fn label_of(kind: DetectorKind, r: usize, t: usize) -> usize {
    match kind {
        DetectorKind::Counter => COUNT_LABELS
            .iter()
            .position(|&l| l == (r as u8, t as u8))
            .unwrap(),
        DetectorKind::Detector => CLICK_LABELS
            .iter()
            .position(|&l| l == ((r > 0) as u8, (t > 0) as u8))
            .unwrap(),
    }
}

/// Unit-efficiency outcome distribution of one setting pair, as the dense
/// oracle sees it.
pub fn oracle_ideal(
    state: &FockState,
    a: &MeasurementSetting,
    b: &MeasurementSetting,
    kind: DetectorKind,
) -> Vec<f64> {
    oracle_lossy(state, a, b, kind, 1.0)
}

/// Outcome distribution of one setting pair with every photon detected
/// independently with probability `eta`.
pub fn oracle_lossy(
    state: &FockState,
    a: &MeasurementSetting,
    b: &MeasurementSetting,
    kind: DetectorKind,
    eta: f64,
) -> Vec<f64> {
    let d = match kind {
        DetectorKind::Counter => COUNT_LABELS.len(),
        DetectorKind::Detector => CLICK_LABELS.len(),
    };
    let counts = dense_counts(state, a, b);
    let mut out = vec![0.0; d * d];
    for (o, &p) in counts.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let m = digits(o);
        for kr_a in 0..=m[0] {
            for kt_a in 0..=m[1] {
                for kr_b in 0..=m[2] {
                    for kt_b in 0..=m[3] {
                        let w = survive(m[0], kr_a, eta)
                            * survive(m[1], kt_a, eta)
                            * survive(m[2], kr_b, eta)
                            * survive(m[3], kt_b, eta);
                        let la = label_of(kind, kr_a, kt_a);
                        let lb = label_of(kind, kr_b, kt_b);
                        out[la * d + lb] += p * w;
                    }
                }
            }
        }
    }
    out
}

/// Full experiment table under uniform setting choices.
pub fn oracle_table(
    state: &FockState,
    settings: &Settings,
    kind: DetectorKind,
    eta: f64,
) -> Vec<f64> {
    let mut table = Vec::new();
    for i in 0..2 {
        for j in 0..2 {
            let row = oracle_lossy(state, &settings.alice(i), &settings.bob(j), kind, eta);
            table.extend(row.into_iter().map(|p| p * 0.25));
        }
    }
    table
}

/// Predicted table of every deterministic strategy of a two-setting
/// scenario: Alice answers (a_1, a_2), Bob (b_1, b_2).
pub fn deterministic_tables(da: usize, db: usize, setting_probs: &[f64]) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for a1 in 0..da {
        for a2 in 0..da {
            for b1 in 0..db {
                for b2 in 0..db {
                    let mut t = vec![0.0; 4 * da * db];
                    for (k, (a, b)) in [(a1, b1), (a1, b2), (a2, b1), (a2, b2)]
                        .into_iter()
                        .enumerate()
                    {
                        t[k * da * db + a * db + b] = setting_probs[k];
                    }
                    out.push(t);
                }
            }
        }
    }
    out
}

fn divergence_bits(q: &[f64], p: &[f64]) -> f64 {
    q.iter()
        .zip(p)
        .filter(|(&qc, _)| qc > 0.0)
        .map(|(&qc, &pc)| qc * (qc / pc).log2())
        .sum()
}

/// Euclidean projection onto the probability simplex.
fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, &x) in u.iter().enumerate() {
        cum += x;
        let t = (cum - 1.0) / (i + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// min over mixtures w of D(q ‖ Σ w_s p_s) in bits, by accelerated
/// projected gradient with backtracking and restarts.
pub fn pg_divergence(q: &[f64], strategies: &[Vec<f64>], iterations: usize) -> f64 {
    let n = strategies.len();
    let mix = |w: &[f64]| -> Vec<f64> {
        let mut p = vec![0.0; q.len()];
        for (ws, s) in w.iter().zip(strategies) {
            if *ws != 0.0 {
                for (pc, sc) in p.iter_mut().zip(s) {
                    *pc += ws * sc;
                }
            }
        }
        p
    };
    let value = |w: &[f64]| divergence_bits(q, &mix(w));
    let grad = |w: &[f64]| -> Vec<f64> {
        let p = mix(w);
        strategies
            .iter()
            .map(|s| {
                -q.iter()
                    .zip(&p)
                    .zip(s)
                    .filter(|((&qc, _), _)| qc > 0.0)
                    .map(|((&qc, &pc), &sc)| qc * sc / pc)
                    .sum::<f64>()
                    / std::f64::consts::LN_2
            })
            .collect()
    };
    let mut w = vec![1.0 / n as f64; n];
    let mut y = w.clone();
    let mut fw = value(&w);
    let mut t: f64 = 1.0;
    let mut step = 1.0;
    for _ in 0..iterations {
        let g = grad(&y);
        let fy = value(&y);
        let next = loop {
            let cand = project_simplex(
                &y.iter()
                    .zip(&g)
                    .map(|(a, b)| a - step * b)
                    .collect::<Vec<_>>(),
            );
            let fc = value(&cand);
            let diff: Vec<f64> = cand.iter().zip(&y).map(|(a, b)| a - b).collect();
            let lin: f64 = g.iter().zip(&diff).map(|(a, b)| a * b).sum();
            let quad: f64 = diff.iter().map(|x| x * x).sum::<f64>() / (2.0 * step);
            if fc.is_finite() && fc <= fy + lin + quad + 1e-15 {
                break (cand, fc);
            }
            step *= 0.5;
            if step < 1e-20 {
                break (y.clone(), fy);
            }
        };
        let (cand, fc) = next;
        if fc > fw {
            // restart momentum
            y = w.clone();
            t = 1.0;
            step *= 1.5;
            continue;
        }
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        y = cand
            .iter()
            .zip(&w)
            .map(|(c, o)| c + (t - 1.0) / t_next * (c - o))
            .collect();
        y = project_simplex(&y);
        w = cand;
        fw = fc;
        t = t_next;
        step *= 1.2;
    }
    fw
}

/// A two-setting table with `da`×`db` outcomes: random rows blended with a
/// random local-realistic table (`blend` = 0 lies inside the polytope).
pub fn random_scenario(seed: u64) -> bell_strength::photonic::ExperimentDistribution {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let da = rng.gen_range(2..=3);
    let db = rng.gen_range(2..=3);
    let blend: f64 = rng.gen_range(0.0..=1.0);
    let sp: Vec<f64> = if rng.gen_bool(0.5) {
        vec![0.25; 4]
    } else {
        let raw: Vec<f64> = (0..4).map(|_| rng.gen_range(0.1..1.0)).collect();
        let total: f64 = raw.iter().sum();
        raw.iter().map(|x| x / total).collect()
    };
    let l = da * db;
    let strategies = deterministic_tables(da, db, &sp);
    let mut local = vec![0.0; 4 * l];
    let mut total = 0.0;
    for s in &strategies {
        let w: f64 = rng.gen_range(0.0..1.0);
        total += w;
        for (x, y) in local.iter_mut().zip(s) {
            *x += w * y;
        }
    }
    let mut table = vec![0.0; 4 * l];
    for k in 0..4 {
        let mut row: Vec<f64> = (0..l)
            .map(|_| {
                if rng.gen_bool(0.15) {
                    0.0
                } else {
                    rng.gen_range(0.0..1.0)
                }
            })
            .collect();
        if row.iter().sum::<f64>() == 0.0 {
            row[0] = 1.0;
        }
        let sum: f64 = row.iter().sum();
        for c in 0..l {
            table[k * l + c] =
                blend * row[c] / sum * sp[k] + (1.0 - blend) * local[k * l + c] / total;
        }
        // exact row sums after blending
        let sum: f64 = table[k * l..(k + 1) * l].iter().sum();
        for c in 0..l {
            table[k * l + c] *= sp[k] / sum;
        }
    }
    bell_strength::photonic::ExperimentDistribution::from_table(2, 2, da, db, sp, table).unwrap()
}

/// Random normalized state over all occupations with at most two photons.
pub fn random_state(seed: u64) -> FockState {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    loop {
        let mut terms = Vec::new();
        for index in 0..DIM {
            let occ = digits(index);
            if occ.iter().sum::<usize>() <= 2 && rng.gen_bool(0.5) {
                let amp = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                terms.push((occ.map(|n| n as u8), amp));
            }
        }
        if let Ok(state) = FockState::normalized(terms) {
            return state;
        }
    }
}

/// Random setting anywhere on the Bloch sphere.
pub fn random_setting(rng: &mut impl rand::Rng) -> MeasurementSetting {
    MeasurementSetting::new(rng.gen_range(-180.0..=180.0), rng.gen_range(0.0..360.0)).unwrap()
}
