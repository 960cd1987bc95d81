//! Witness construction and verification: from a certificate, an explicit
//! (κ, b, x, y) with two distinct positive zeros, built in exact rational
//! arithmetic over fixed-precision approximations of the exponentials.

use std::cell::RefCell;
use std::collections::BTreeMap;

use num::{BigInt, One, Signed, Zero};
use thiserror::Error;

use crate::cones::{cone_feasible, ConstraintSystem, Relation};
use crate::engine::{gamma_intersection, i_sets_at, Certificate};
use crate::model::AugmentedVerticalSystem;
use crate::rational::{rat, rat_int, sign_of, Rat, RatMatrix};
use crate::reduction::{induces_forest, Reduction, TreeComponent};
use crate::signs::{lambda_sets, oriented_matrix};

#[derive(Debug, Error)]
pub enum WitnessError {
    /// A strict inequality or sign that holds for the exact exponents was
    /// lost by the approximated exponentials; retry at higher precision.
    #[error("working precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("simplified matrix does not induce a forest")]
    NotForest,
    #[error("internal witness invariant violated: {0}")]
    Internal(String),
}

/// Rounds to the nearest rational with a `bits`-bit numerator over a power
/// of two, preserving sign; relative error below 2^{1−bits}.
pub fn round_to_bits(x: &Rat, bits: u32) -> Rat {
    if x.is_zero() {
        return Rat::zero();
    }
    let neg = x.is_negative();
    let num = x.numer().abs();
    let den = x.denom().abs();
    let e = num.bits() as i64 - den.bits() as i64;
    let shift = bits as i64 - e;
    let (sn, sd) = if shift >= 0 {
        (num << shift as u64, den)
    } else {
        (num, den << (-shift) as u64)
    };
    let m = (&sn * 2 + &sd) / (&sd * 2);
    let mut r = if shift >= 0 {
        Rat::new(m, BigInt::one() << shift as u64)
    } else {
        Rat::from_integer(m << (-shift) as u64)
    };
    if neg {
        r = -r;
    }
    r
}

/// Taylor series of e^f for |f| ≤ 1/2, with intermediate rounding.
fn exp_taylor(f: &Rat, guard: u32) -> Rat {
    let eps = Rat::new(BigInt::one(), BigInt::one() << (guard as u64 + 8));
    let mut sum = Rat::one();
    let mut term = Rat::one();
    let mut t: i64 = 1;
    loop {
        term = round_to_bits(&(&term * f / rat_int(t)), guard + 16);
        if term.is_zero() {
            break;
        }
        sum = round_to_bits(&(&sum + &term), guard + 16);
        if term.abs() < eps {
            break;
        }
        t += 1;
    }
    sum
}

fn pow_round(base: &Rat, mut e: u64, guard: u32) -> Rat {
    let mut acc = Rat::one();
    let mut sq = base.clone();
    while e > 0 {
        if e & 1 == 1 {
            acc = round_to_bits(&(&acc * &sq), guard + 16);
        }
        e >>= 1;
        if e > 0 {
            sq = round_to_bits(&(&sq * &sq), guard + 16);
        }
    }
    acc
}

/// Deterministic approximation of e^x with relative error below 2^{−prec};
/// exact at x = 0. The result is an exact (dyadic) rational.
pub fn exp_approx(x: &Rat, prec: u32) -> Rat {
    if x.is_zero() {
        return Rat::one();
    }
    let guard = prec + 32;
    let q_rat = x.round();
    let f = round_to_bits(&(x - &q_rat), guard + 16);
    let ef = exp_taylor(&f, guard);
    let q = q_rat.to_integer();
    let qa = u64::try_from(q.magnitude().clone()).expect("exponent out of range");
    let e_half = exp_taylor(&rat(1, 2), guard);
    let e1 = round_to_bits(&(&e_half * &e_half), guard + 16);
    let eq = pow_round(&e1, qa, guard);
    let val = if q.is_negative() { &ef / &eq } else { &ef * &eq };
    round_to_bits(&val, prec + 16)
}

/// Decimal rendering with `digits` fractional digits, rounded to nearest.
pub fn decimal_string(x: &Rat, digits: u32) -> String {
    let neg = x.is_negative();
    let a = x.abs();
    let scale = num::pow(BigInt::from(10), digits as usize);
    let scaled: BigInt = (a.numer() * &scale * 2 + a.denom()) / (a.denom() * 2);
    let s = scaled.to_string();
    let d = digits as usize;
    let (int_part, frac_part) = if s.len() > d {
        (s[..s.len() - d].to_string(), s[s.len() - d..].to_string())
    } else {
        ("0".to_string(), format!("{s:0>d$}"))
    };
    let sign = if neg && scaled != BigInt::zero() { "-" } else { "" };
    if d == 0 {
        format!("{sign}{int_part}")
    } else {
        format!("{sign}{int_part}.{frac_part}")
    }
}

/// Cached deterministic exponential values at one working precision.
pub struct ExpCtx {
    prec: u32,
    cache: RefCell<BTreeMap<Rat, Rat>>,
}

impl ExpCtx {
    fn new(prec: u32) -> Self {
        ExpCtx {
            prec,
            cache: RefCell::new(BTreeMap::new()),
        }
    }

    fn e(&self, v: &Rat) -> Rat {
        if let Some(r) = self.cache.borrow().get(v) {
            return r.clone();
        }
        let r = exp_approx(v, self.prec);
        self.cache.borrow_mut().insert(v.clone(), r.clone());
        r
    }
}

#[derive(Debug, Clone)]
pub struct Witness {
    /// Rate parameters, in the input column order.
    pub kappa: Vec<Rat>,
    pub b: Vec<Rat>,
    pub x: Vec<Rat>,
    pub y: Vec<Rat>,
    /// x − y, an exact kernel vector of L.
    pub z: Vec<Rat>,
    pub delta: Vec<Rat>,
    /// M⊤δ, the exponent shifts of the reduced system.
    pub rho_bar: Vec<Rat>,
    pub precision: u32,
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub c_y_residual: Rat,
    pub c_x_residual: Rat,
    pub l_y_residual: Rat,
    pub l_x_residual: Rat,
    pub separation: Rat,
    pub positive: bool,
    pub distinct: bool,
    pub tolerance: Rat,
    pub pass: bool,
}

/// Default verification tolerance at a working precision: 2^{−prec/2}.
pub fn default_tolerance(prec: u32) -> Rat {
    Rat::new(BigInt::one(), BigInt::one() << (prec as u64 / 2))
}

fn sigma_ratio(sigma: &crate::signs::Orientation, j: usize) -> i8 {
    let (s1, s2) = sigma.sigma[j];
    s1 * s2
}

/// A_ρ^σ over the approximated exponentials; entries are exact rationals.
fn a_tilde(p: &RatMatrix, cert: &Certificate, ctx: &ExpCtx) -> RatMatrix {
    let s = p.rows();
    let l = p.cols();
    let mut a = RatMatrix::zeros(s, l);
    for i in 0..s {
        for k in 0..l {
            let (s1, s2) = cert.sigma.sigma[k];
            let v = rat_int(s1 as i64) * ctx.e(&cert.rho[i])
                - rat_int(s2 as i64) * ctx.e(&cert.rho[s + k]);
            *a.at_mut(i, k) = p.at(i, k) * v;
        }
    }
    a
}

/// Solves the oriented characteristic system exactly when the simplified
/// matrix induces a forest: builds a balanced matrix with the certified sign
/// pattern, adjusts two entries per remaining row, and propagates positive
/// scalings along the support trees.
pub fn solve_oriented_characteristic(
    cert: &Certificate,
    red: &Reduction,
    ctx: &ExpCtx,
) -> Result<Vec<Rat>, WitnessError> {
    let p = &red.p;
    let s = p.rows();
    let l = p.cols();
    let (is_forest, comps) = induces_forest(p);
    if !is_forest {
        return Err(WitnessError::NotForest);
    }
    let lambda = lambda_sets(p, &cert.sigma, &cert.s_matrix);
    let atil = a_tilde(p, cert, ctx);
    // the approximated matrix must realize the certified sign pattern
    for i in 0..s {
        for k in 0..l {
            if sign_of(atil.at(i, k)) != cert.s_matrix.at(i, k) {
                return Err(WitnessError::PrecisionExhausted(format!(
                    "sign of characteristic entry ({},{}) lost",
                    i + 1,
                    k + 1
                )));
            }
        }
    }
    let (ip, im) = i_sets_at(&cert.sigma, &lambda, s, &cert.rho);
    let mut gamma_rows: Vec<usize> = ip.iter().chain(&im).copied().collect();
    gamma_rows.sort_unstable();
    let mu_base = gamma_intersection(p, &cert.sigma, &lambda, &gamma_rows).ok_or_else(|| {
        WitnessError::Internal("certificate lies in the exclusion set".into())
    })?;
    let ps = oriented_matrix(p, &cert.sigma);
    // denominator of the simplified-entry terms: e^{ρ_i} − (σ₂/σ₁)e^{ρ_{s+k}}
    let denom = |i: usize, j: usize| -> Rat {
        let r = sigma_ratio(&cert.sigma, j);
        ctx.e(&cert.rho[i]) - rat_int(r as i64) * ctx.e(&cert.rho[s + j])
    };
    let mut q = RatMatrix::zeros(s, l);
    let mut v_row = vec![Rat::zero(); s];
    for i in 0..s {
        let row = &lambda.rows[i];
        let lam = row.lambda();
        let lam_ne = row.lambda_ne();
        // balanced start: positive mass split over Λ^{·+}, negative over Λ^{·−}
        let pos: Vec<usize> = [&row.pp, &row.zp, &row.mp]
            .iter()
            .flat_map(|v| v.iter().copied())
            .collect();
        let neg: Vec<usize> = [&row.pm, &row.zm, &row.mm]
            .iter()
            .flat_map(|v| v.iter().copied())
            .collect();
        if !lam.is_empty() && (pos.is_empty() || neg.is_empty()) {
            return Err(WitnessError::Internal("one-sided sign row".into()));
        }
        for &j in &pos {
            *q.at_mut(i, j) = rat_int(1) / (rat_int(pos.len() as i64) * &mu_base[j]);
        }
        for &j in &neg {
            *q.at_mut(i, j) = rat_int(-1) / (rat_int(neg.len() as i64) * &mu_base[j]);
        }
        let t1: Rat = lam_ne
            .iter()
            .map(|&j| q.at(i, j) * &mu_base[j] / denom(i, j))
            .sum();
        let t2: Rat = (0..l)
            .filter(|j| !lam.contains(j))
            .map(|j| ps.at(i, j) * &mu_base[j])
            .sum();
        let small_omega = ip.contains(&i)
            || im.contains(&i)
            || (row.pp.is_empty() && row.pm.is_empty());
        if small_omega {
            if !t2.is_positive() {
                return Err(WitnessError::Internal(
                    "complement sum not positive in scaled case".into(),
                ));
            }
            // scale the whole row so the adjusted sum stays positive
            let c = if t1.is_negative() {
                let zeroing = &t2 / (-&t1);
                if zeroing < rat_int(1) {
                    zeroing / rat_int(2)
                } else {
                    Rat::one()
                }
            } else {
                Rat::one()
            };
            for j in 0..l {
                let val = q.at(i, j) * &c;
                *q.at_mut(i, j) = val;
            }
            v_row[i] = &c * &t1 + &t2;
        } else {
            // pick a pair (j₁, j₂) raising the row sum without changing signs
            let strictly_above = |j1: usize, j2: usize| -> bool {
                let r1 = rat_int(sigma_ratio(&cert.sigma, j1) as i64);
                let r2 = rat_int(sigma_ratio(&cert.sigma, j2) as i64);
                (r1 * ctx.e(&cert.rho[s + j1]) - r2 * ctx.e(&cert.rho[s + j2])).is_positive()
            };
            let pair: Option<(usize, usize)> = if row.pm.is_empty() && row.zm.is_empty() {
                let mut found = None;
                'o2: for &j1 in &row.pp {
                    for &j2 in &row.mm {
                        if strictly_above(j1, j2) {
                            found = Some((j1, j2));
                            break 'o2;
                        }
                    }
                }
                found
            } else if row.pp.is_empty() && row.zp.is_empty() {
                let mut found = None;
                'o3: for &j1 in &row.mp {
                    for &j2 in &row.pm {
                        if strictly_above(j1, j2) {
                            found = Some((j1, j2));
                            break 'o3;
                        }
                    }
                }
                found
            } else {
                let mut found = None;
                'o1: for &j1 in row.pp.iter().chain(&row.zp) {
                    for &j2 in row.pm.iter().chain(&row.zm) {
                        if row.pp.contains(&j1) || row.pm.contains(&j2) {
                            found = Some((j1, j2));
                            break 'o1;
                        }
                    }
                }
                found
            };
            let (j1, j2) = pair.ok_or_else(|| {
                WitnessError::PrecisionExhausted("no admissible adjustment pair".into())
            })?;
            let mut theta = Rat::zero();
            if lam_ne.contains(&j1) {
                theta += &mu_base[j1] / denom(i, j1);
            }
            if lam_ne.contains(&j2) {
                theta -= &mu_base[j1] / denom(i, j2);
            }
            if !theta.is_positive() {
                return Err(WitnessError::PrecisionExhausted(
                    "adjustment slope not positive".into(),
                ));
            }
            let base = &t1 + &t2;
            let target = if base < rat_int(1) {
                rat_int(1)
            } else {
                &base + rat_int(1)
            };
            let omega = (&target - &base) / &theta;
            *q.at_mut(i, j1) = q.at(i, j1) + &omega;
            *q.at_mut(i, j2) = q.at(i, j2) - &mu_base[j1] / &mu_base[j2] * &omega;
            v_row[i] = target;
        }
        // the adjusted row still balances μ and keeps the sign pattern
        debug_assert!({
            let dot: Rat = (0..l).map(|j| q.at(i, j) * &mu_base[j]).sum();
            dot.is_zero()
        });
        for j in 0..l {
            if sign_of(q.at(i, j)) != cert.s_matrix.at(i, j) {
                return Err(WitnessError::Internal("adjusted row changed sign".into()));
            }
        }
    }
    // propagate scalings along the support trees: for every edge (i, j),
    // μ_j = ω_i · (Q_{ij}/A_{ij}) · μ_base_j, with 0/0 read as 1
    let ratio = |qv: &Rat, av: &Rat| -> Result<Rat, WitnessError> {
        if qv.is_zero() && av.is_zero() {
            Ok(Rat::one())
        } else if av.is_zero() || qv.is_zero() {
            Err(WitnessError::Internal("support mismatch on tree edge".into()))
        } else {
            Ok(qv / av)
        }
    };
    let mut omega = vec![Rat::zero(); s];
    let mut mu = vec![Rat::zero(); l];
    let propagate = |comp: &TreeComponent,
                     omega: &mut Vec<Rat>,
                     mu: &mut Vec<Rat>|
     -> Result<(), WitnessError> {
        for &v in &comp.order {
            match comp.parent[v] {
                None => {
                    if v < s {
                        omega[v] = Rat::one();
                    } else {
                        // isolated column
                        mu[v - s] = mu_base[v - s].clone();
                    }
                }
                Some(pa) => {
                    if v >= s {
                        let (i, j) = (pa, v - s);
                        mu[j] = &omega[i] * ratio(q.at(i, j), atil.at(i, j))? * &mu_base[j];
                    } else {
                        let (i, j) = (v, pa - s);
                        let r = ratio(q.at(i, j), atil.at(i, j))?;
                        omega[i] = &mu[j] / (&r * &mu_base[j]);
                    }
                }
            }
        }
        Ok(())
    };
    for comp in &comps {
        propagate(comp, &mut omega, &mut mu)?;
    }
    for w in &omega {
        if !w.is_positive() {
            return Err(WitnessError::Internal("nonpositive tree scaling".into()));
        }
    }
    check_characteristic_solution(&atil, &ps, &mu)?;
    Ok(mu)
}

/// Solves the oriented characteristic system by exact linear programming
/// over the approximated characteristic matrix (the non-forest fallback).
pub fn solve_numeric(
    cert: &Certificate,
    red: &Reduction,
    ctx: &ExpCtx,
) -> Result<Vec<Rat>, WitnessError> {
    let p = &red.p;
    let atil = a_tilde(p, cert, ctx);
    let ps = oriented_matrix(p, &cert.sigma);
    let l = p.cols();
    let names: Vec<String> = (1..=l).map(|k| format!("mu{k}")).collect();
    let mut sys = ConstraintSystem::new(names);
    for k in 0..l {
        sys.push_sparse(&[(k, 1)], Relation::Gt);
    }
    for i in 0..p.rows() {
        sys.push(ps.row(i).to_vec(), Relation::Gt);
        sys.push(atil.row(i).to_vec(), Relation::Eq);
    }
    let mu = cone_feasible(&sys).ok_or_else(|| {
        WitnessError::PrecisionExhausted(
            "approximated characteristic system has no positive solution".into(),
        )
    })?;
    check_characteristic_solution(&atil, &ps, &mu)?;
    Ok(mu)
}

fn check_characteristic_solution(
    atil: &RatMatrix,
    ps: &RatMatrix,
    mu: &[Rat],
) -> Result<(), WitnessError> {
    for i in 0..atil.rows() {
        let dot: Rat = (0..atil.cols()).map(|j| atil.at(i, j) * &mu[j]).sum();
        if !dot.is_zero() {
            return Err(WitnessError::Internal("characteristic row not annihilated".into()));
        }
        let pdot: Rat = (0..ps.cols()).map(|j| ps.at(i, j) * &mu[j]).sum();
        if !pdot.is_positive() {
            return Err(WitnessError::Internal("oriented row sum not positive".into()));
        }
    }
    for m in mu {
        if !m.is_positive() {
            return Err(WitnessError::Internal("nonpositive solution entry".into()));
        }
    }
    Ok(())
}

/// Interior convex weights β over `vals` hitting `target` exactly: a blend
/// of the uniform weights with a single endpoint.
fn interior_weights(vals: &[Rat], target: &Rat) -> Result<Vec<Rat>, WitnessError> {
    let n = vals.len();
    if n == 1 {
        if &vals[0] != target {
            return Err(WitnessError::PrecisionExhausted(
                "singleton block value drifted from its target".into(),
            ));
        }
        return Ok(vec![Rat::one()]);
    }
    let mean: Rat = vals.iter().sum::<Rat>() / rat_int(n as i64);
    if target == &mean {
        return Ok(vec![Rat::one() / rat_int(n as i64); n]);
    }
    let (idx, endpoint) = if target > &mean {
        let idx = (0..n).max_by_key(|&j| &vals[j]).unwrap();
        (idx, vals[idx].clone())
    } else {
        let idx = (0..n).min_by_key(|&j| &vals[j]).unwrap();
        (idx, vals[idx].clone())
    };
    if endpoint == mean {
        return Err(WitnessError::PrecisionExhausted(
            "degenerate block spread".into(),
        ));
    }
    let t = (target - &mean) / (&endpoint - &mean);
    if !t.is_positive() || t >= Rat::one() {
        return Err(WitnessError::PrecisionExhausted(
            "interval target drifted outside the block spread".into(),
        ));
    }
    let uniform = (Rat::one() - &t) / rat_int(n as i64);
    let mut beta = vec![uniform; n];
    beta[idx] += &t;
    debug_assert!({
        let hit: Rat = (0..n).map(|j| &beta[j] * &vals[j]).sum();
        hit == *target && beta.iter().sum::<Rat>() == Rat::one()
    });
    Ok(beta)
}

/// Lifts a solution of the simplified characteristic system to the reduced
/// one, splitting each column block by interior convex weights and the
/// block scalings (ω₊, ω₋).
pub fn lift_simplification(
    mu: &[Rat],
    cert: &Certificate,
    red: &Reduction,
    rho_bar: &[Rat],
    ctx: &ExpCtx,
) -> Result<Vec<Rat>, WitnessError> {
    let s = red.s();
    let sbar = red.pbar.rows();
    let lbar = red.pbar.cols();
    let mut mubar = vec![Rat::zero(); lbar];
    for (k, block) in red.alpha.iter().enumerate() {
        let e_target = ctx.e(&cert.rho[s + k]);
        if red.u1.contains(&k) {
            let vals: Vec<Rat> = block.iter().map(|&j| ctx.e(&rho_bar[sbar + j])).collect();
            let beta = interior_weights(&vals, &e_target)?;
            for (pos, &j) in block.iter().enumerate() {
                mubar[j] = &beta[pos] / &red.gamma[j] * &mu[k];
            }
        } else {
            let pos_in_u2 = red.u2.iter().position(|&u| u == k).unwrap();
            let (ap, am) = &cert.aux[pos_in_u2];
            let jp: Vec<usize> = block
                .iter()
                .copied()
                .filter(|&j| sign_of(&red.gamma[j]) > 0)
                .collect();
            let jn: Vec<usize> = block
                .iter()
                .copied()
                .filter(|&j| sign_of(&red.gamma[j]) < 0)
                .collect();
            let e_ap = ctx.e(ap);
            let e_am = ctx.e(am);
            let vals_p: Vec<Rat> = jp.iter().map(|&j| ctx.e(&rho_bar[sbar + j])).collect();
            let vals_n: Vec<Rat> = jn.iter().map(|&j| ctx.e(&rho_bar[sbar + j])).collect();
            let beta_p = interior_weights(&vals_p, &e_ap)?;
            let beta_n = interior_weights(&vals_n, &e_am)?;
            let (s1, s2) = cert.sigma.sigma[k];
            let (w_plus, w_minus) = if ap == am {
                match s1 {
                    1 => (rat_int(2), rat_int(1)),
                    -1 => (rat_int(1), rat_int(2)),
                    _ => (rat_int(1), rat_int(1)),
                }
            } else {
                let den = &e_ap - &e_am;
                let s1r = rat_int(s1 as i64);
                let s2r = rat_int(s2 as i64);
                let wp = (&s2r * &e_target - &s1r * &e_am) / &den;
                let wm = (&s2r * &e_target - &s1r * &e_ap) / &den;
                (wp, wm)
            };
            if !w_plus.is_positive() || !w_minus.is_positive() {
                return Err(WitnessError::PrecisionExhausted(
                    "block scaling lost positivity".into(),
                ));
            }
            for (pos, &j) in jp.iter().enumerate() {
                mubar[j] = &w_plus * &beta_p[pos] / &red.gamma[j] * &mu[k];
            }
            for (pos, &j) in jn.iter().enumerate() {
                mubar[j] = -(&w_minus * &beta_n[pos] / &red.gamma[j]) * &mu[k];
            }
        }
    }
    for v in &mubar {
        if !v.is_positive() {
            return Err(WitnessError::Internal("nonpositive lifted entry".into()));
        }
    }
    // the lift must annihilate the reduced characteristic matrix row-wise
    for i in 0..sbar {
        let dot: Rat = (0..lbar)
            .map(|j| {
                red.pbar.at(i, j)
                    * (ctx.e(&rho_bar[i]) - ctx.e(&rho_bar[sbar + j]))
                    * &mubar[j]
            })
            .sum();
        if !dot.is_zero() {
            return Err(WitnessError::Internal(
                "lifted solution does not annihilate the reduced system".into(),
            ));
        }
    }
    Ok(mubar)
}

fn int_exponent(v: &Rat) -> Result<i64, WitnessError> {
    if !v.denom().is_one() {
        return Err(WitnessError::Internal("non-integer exponent".into()));
    }
    i64::try_from(v.numer().clone())
        .map_err(|_| WitnessError::Internal("exponent out of range".into()))
}

fn rat_pow(base: &Rat, e: i64) -> Rat {
    if e == 0 {
        return Rat::one();
    }
    let p = num::pow(base.clone(), e.unsigned_abs() as usize);
    if e < 0 {
        Rat::one() / p
    } else {
        p
    }
}

/// Assembles the witness from the lifted kernel vector: the two zeros share
/// the rates κ and the linear data b by construction.
fn build_witness(
    mubar: &[Rat],
    cert: &Certificate,
    red: &Reduction,
    sys: &AugmentedVerticalSystem,
    rho_bar: &[Rat],
    ctx: &ExpCtx,
) -> Result<Witness, WitnessError> {
    let sbar = red.pbar.rows();
    let lbar = red.pbar.cols();
    let n = sys.n();
    let mbar = sys.mbar();
    // β = [P̄; I]·μ̄ ∈ ker(C), strictly positive
    let mut beta = vec![Rat::zero(); mbar];
    for i in 0..sbar {
        beta[i] = (0..lbar).map(|j| red.pbar.at(i, j) * &mubar[j]).sum();
    }
    for j in 0..lbar {
        beta[sbar + j] = mubar[j].clone();
    }
    for v in &beta {
        if !v.is_positive() {
            return Err(WitnessError::Internal("kernel vector not positive".into()));
        }
    }
    let z = &cert.kernel_witness;
    let mut y = vec![Rat::zero(); n];
    let mut x = vec![Rat::zero(); n];
    for t in 0..n {
        let ed = ctx.e(&cert.delta[t]);
        if cert.delta[t].is_zero() {
            if !z[t].is_zero() {
                return Err(WitnessError::Internal("kernel sign mismatch".into()));
            }
            y[t] = Rat::one();
        } else {
            let den = &ed - Rat::one();
            if sign_of(&den) != sign_of(&cert.delta[t]) {
                return Err(WitnessError::PrecisionExhausted(
                    "exponential crossed 1 on a nonzero shift".into(),
                ));
            }
            y[t] = &z[t] / den;
        }
        x[t] = &ed * &y[t];
        if !y[t].is_positive() || !x[t].is_positive() {
            return Err(WitnessError::Internal("zero coordinates not positive".into()));
        }
    }
    // κ in the system's (principal) column order, then mapped back
    let mut kappa_sys = vec![Rat::zero(); mbar];
    for j in 0..mbar {
        let mut mono = Rat::one();
        for t in 0..n {
            mono *= rat_pow(&y[t], int_exponent(sys.m.at(t, j))?);
        }
        kappa_sys[j] = &beta[j] / mono;
        if !kappa_sys[j].is_positive() {
            return Err(WitnessError::Internal("rate not positive".into()));
        }
    }
    let mut kappa = vec![Rat::zero(); mbar];
    for (new, &old) in sys.column_permutation.iter().enumerate() {
        kappa[old] = kappa_sys[new].clone();
    }
    let b: Vec<Rat> = (0..sys.l.rows())
        .map(|i| (0..n).map(|t| sys.l.at(i, t) * &y[t]).sum())
        .collect();
    Ok(Witness {
        kappa,
        b,
        x,
        y,
        z: z.clone(),
        delta: cert.delta.clone(),
        rho_bar: rho_bar.to_vec(),
        precision: ctx.prec,
    })
}

/// Recomputes all residuals and acceptance checks from the stored vectors.
/// The vectors are exact rationals, so every quantity here is exact; only
/// the construction itself depended on the working precision.
pub fn verify_witness(sys: &AugmentedVerticalSystem, w: &Witness, tolerance: &Rat) -> VerifyReport {
    let n = sys.n();
    let mbar = sys.mbar();
    let kappa_sys: Vec<Rat> = sys
        .column_permutation
        .iter()
        .map(|&old| w.kappa[old].clone())
        .collect();
    let mono = |point: &[Rat], j: usize| -> Rat {
        let mut v = Rat::one();
        for t in 0..n {
            let e = sys.m.at(t, j).numer().clone();
            v *= rat_pow(&point[t], i64::try_from(e).unwrap_or(0));
        }
        v
    };
    let residual = |point: &[Rat]| -> Rat {
        let terms: Vec<Rat> = (0..mbar).map(|j| &kappa_sys[j] * mono(point, j)).collect();
        let mut worst = Rat::zero();
        let mut scale = Rat::one();
        for i in 0..sys.c.rows() {
            let mut acc = Rat::zero();
            let mut mag = Rat::zero();
            for j in 0..mbar {
                let term = sys.c.at(i, j) * &terms[j];
                mag += term.abs();
                acc += term;
            }
            worst = worst.max(acc.abs());
            scale = scale.max(mag);
        }
        worst / scale
    };
    let lin_residual = |point: &[Rat]| -> Rat {
        let mut worst = Rat::zero();
        for i in 0..sys.l.rows() {
            let acc: Rat = (0..n).map(|t| sys.l.at(i, t) * &point[t]).sum::<Rat>() - &w.b[i];
            worst = worst.max(acc.abs());
        }
        worst
    };
    let c_y = residual(&w.y);
    let c_x = residual(&w.x);
    let l_y = lin_residual(&w.y);
    let l_x = lin_residual(&w.x);
    let mut separation = Rat::zero();
    for t in 0..n {
        let denom = w.x[t].abs().max(w.y[t].abs()).max(Rat::one());
        separation = separation.max((&w.x[t] - &w.y[t]).abs() / denom);
    }
    let positive = w.kappa.iter().all(|v| v.is_positive())
        && w.x.iter().all(|v| v.is_positive())
        && w.y.iter().all(|v| v.is_positive());
    let distinct = w.x != w.y;
    let pass = positive
        && distinct
        && separation.is_positive()
        && &c_y <= tolerance
        && &c_x <= tolerance
        && &l_y <= tolerance
        && &l_x <= tolerance;
    VerifyReport {
        c_y_residual: c_y,
        c_x_residual: c_x,
        l_y_residual: l_y,
        l_x_residual: l_x,
        separation,
        positive,
        distinct,
        tolerance: tolerance.clone(),
        pass,
    }
}

fn finish(
    cert: &Certificate,
    red: &Reduction,
    sys: &AugmentedVerticalSystem,
    mu: Vec<Rat>,
    ctx: &ExpCtx,
) -> Result<(Witness, VerifyReport), WitnessError> {
    let n = sys.n();
    let mbar = sys.mbar();
    let rho_bar: Vec<Rat> = (0..mbar)
        .map(|j| (0..n).map(|t| sys.m.at(t, j) * &cert.delta[t]).sum())
        .collect();
    // the ground set ties the simplified row shifts to the reduced ones
    for (u, block) in red.tau.iter().enumerate() {
        for &i in block {
            if rho_bar[i] != cert.rho[u] {
                return Err(WitnessError::Internal("row shift mismatch".into()));
            }
        }
    }
    let mubar = lift_simplification(&mu, cert, red, &rho_bar, ctx)?;
    let w = build_witness(&mubar, cert, red, sys, &rho_bar, ctx)?;
    let report = verify_witness(sys, &w, &default_tolerance(ctx.prec));
    Ok((w, report))
}

/// Exact witness construction for forest instances.
pub fn construct_forest(
    cert: &Certificate,
    red: &Reduction,
    sys: &AugmentedVerticalSystem,
    precision: u32,
) -> Result<(Witness, VerifyReport), WitnessError> {
    let ctx = ExpCtx::new(precision);
    let mu = solve_oriented_characteristic(cert, red, &ctx)?;
    finish(cert, red, sys, mu, &ctx)
}

/// Witness attempt for non-forest instances: solves the approximated
/// characteristic system by exact LP instead of tree propagation.
pub fn construct_numeric(
    cert: &Certificate,
    red: &Reduction,
    sys: &AugmentedVerticalSystem,
    precision: u32,
) -> Result<(Witness, VerifyReport), WitnessError> {
    let ctx = ExpCtx::new(precision);
    let mu = solve_numeric(cert, red, &ctx)?;
    finish(cert, red, sys, mu, &ctx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{decide, EngineOptions, VerdictKind};
    use crate::model::parse_system;

    fn pow2_inv(bits: u64) -> Rat {
        Rat::new(BigInt::one(), BigInt::one() << bits)
    }

    #[test]
    fn exp_at_zero_is_exact() {
        assert_eq!(exp_approx(&rat_int(0), 64), Rat::one());
    }

    #[test]
    fn exp_matches_reference_digits() {
        // e to 45 decimal places
        let e_ref: Rat = Rat::new(
            "2718281828459045235360287471352662497757247093"
                .parse::<BigInt>()
                .unwrap(),
            num::pow(BigInt::from(10), 45),
        );
        let got = exp_approx(&rat_int(1), 128);
        assert!((got - e_ref).abs() < pow2_inv(120));
    }

    #[test]
    fn exp_inverse_identity() {
        let a = rat(7, 3);
        let prod = exp_approx(&a, 128) * exp_approx(&(-a), 128);
        assert!((prod - Rat::one()).abs() < pow2_inv(120));
    }

    #[test]
    fn exp_monotone_on_grid() {
        let prec = 96;
        let mut prev = exp_approx(&rat_int(-5), prec);
        assert!(prev.is_positive());
        for k in -19..=20 {
            let v = rat(k, 4);
            let cur = exp_approx(&v, prec);
            assert!(cur > prev, "not increasing at {v}");
            prev = cur;
        }
    }

    #[test]
    fn round_to_bits_relative_error() {
        let mut state = 0x2545f4914f6cdd1du64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        for _ in 0..200 {
            let num = (next() % 2_000_000) as i64 - 1_000_000;
            let den = (next() % 999_983 + 1) as i64;
            let x = rat(num, den);
            if x.is_zero() {
                continue;
            }
            let r = round_to_bits(&x, 80);
            assert!(((&r - &x) / &x).abs() <= pow2_inv(79));
        }
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(decimal_string(&rat(1, 2), 4), "0.5000");
        assert_eq!(decimal_string(&rat(-7, 4), 2), "-1.75");
        assert_eq!(decimal_string(&rat_int(12), 0), "12");
        assert_eq!(decimal_string(&rat(1, 3), 6), "0.333333");
        assert_eq!(decimal_string(&rat(2, 3), 3), "0.667");
    }

    #[test]
    fn interior_weights_hit_target() {
        let vals = vec![rat_int(1), rat_int(2), rat_int(10)];
        let target = rat(7, 2);
        let beta = interior_weights(&vals, &target).unwrap();
        let hit: Rat = beta.iter().zip(&vals).map(|(b, v)| b * v).sum();
        assert_eq!(hit, target);
        assert!(beta.iter().all(|b| b.is_positive() && *b < Rat::one()));
        assert_eq!(beta.iter().sum::<Rat>(), Rat::one());
        // out-of-range target fails
        assert!(interior_weights(&vals, &rat_int(11)).is_err());
    }

    fn hhk_system() -> AugmentedVerticalSystem {
        parse_system(
            "C 4 6\n1 0 0 0 1 -1\n0 1 0 0 0 -1\n0 0 1 0 -1 0\n0 0 0 1 1 -1\n\
             M 6 6\n1 0 0 0 0 0\n0 1 0 0 0 0\n0 0 1 1 0 0\n0 0 0 0 1 0\n0 0 0 1 1 0\n0 0 0 0 0 1\n\
             L 2 6\n1 1 1 1 0 0\n0 0 0 0 1 1\n",
        )
        .unwrap()
    }

    #[test]
    fn hhk_end_to_end_witness() {
        let sys = hhk_system();
        let v = decide(&sys, &EngineOptions::default()).unwrap();
        assert_eq!(v.kind, VerdictKind::Multiple);
        let w = v.witness.as_ref().expect("witness");
        let rep = v.report.as_ref().expect("report");
        assert!(rep.pass, "report: {rep:?}");
        // the y-side and linear residuals are exactly zero by construction
        assert!(rep.c_y_residual.is_zero());
        assert!(rep.l_y_residual.is_zero());
        assert!(rep.l_x_residual.is_zero());
        assert!(rep.c_x_residual <= pow2_inv(64));
        assert!(rep.separation.is_positive());
        assert_eq!(w.x.len(), 6);
        for t in 0..6 {
            assert_eq!(&w.x[t] - &w.y[t], w.z[t]);
        }
    }

    #[test]
    fn hhk_residual_shrinks_with_precision() {
        let sys = hhk_system();
        let r128 = decide(&sys, &EngineOptions::default())
            .unwrap()
            .report
            .unwrap()
            .c_x_residual;
        let opts = EngineOptions {
            precision: 256,
            ..EngineOptions::default()
        };
        let r256 = decide(&sys, &opts).unwrap().report.unwrap().c_x_residual;
        assert!(r128.is_positive());
        assert!(&r256 * Rat::from_integer(BigInt::one() << 32) <= r128);
    }

    #[test]
    fn univariate_equal_rates() {
        let sys = parse_system("C 1 2\n1 -1\nM 1 2\n2 2\n").unwrap();
        let v = decide(&sys, &EngineOptions::default()).unwrap();
        assert_eq!(v.kind, VerdictKind::Multiple);
        let w = v.witness.unwrap();
        // f = (κ₁ − κ₂)x²: two positive zeros force κ₁ = κ₂ exactly
        assert_eq!(w.kappa[0], w.kappa[1]);
        assert_ne!(w.x[0], w.y[0]);
        let rep = v.report.unwrap();
        assert!(rep.pass);
        assert!(rep.c_x_residual.is_zero());
    }

    #[test]
    fn perturbed_witness_fails_verification() {
        let sys = hhk_system();
        let v = decide(&sys, &EngineOptions::default()).unwrap();
        let mut w = v.witness.unwrap();
        let tol = default_tolerance(128);
        assert!(verify_witness(&sys, &w, &tol).pass);
        w.x[0] += rat(1, 1000);
        let rep = verify_witness(&sys, &w, &tol);
        assert!(!rep.pass);
    }
}
