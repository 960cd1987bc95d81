//! Linear encodings of the sign conditions, the oriented ground set and the
//! complement of the exclusion set; the search over their conjunctions; and
//! the final verdict.

use std::sync::atomic::{AtomicUsize, Ordering};

use num::Zero;
use rayon::prelude::*;
use thiserror::Error;

use crate::cones::{
    cone_feasible, realizable_sign_vectors, Branch, ConstraintSystem, Disjunction, Relation,
};
use crate::model::AugmentedVerticalSystem;
use crate::rational::{rat_int, sign_of, LinAlgError, Rat, RatMatrix};
use crate::reduction::{
    compute_partitions, induces_forest, reduced_matrix, PartitionMode, Reduction,
};
use crate::signs::{
    enumerate_orientations, enumerate_sign_matrices, forced_sign, lambda_sets, oriented_matrix,
    LambdaSets, Orientation, SignMatrix,
};
use crate::witness::{self, VerifyReport, Witness, WitnessError};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    LinAlg(#[from] LinAlgError),
    /// A forest-case witness failed to verify; this contradicts the theory
    /// and indicates an internal defect, so it aborts with diagnostics.
    #[error("internal error: witness construction failed on a forest instance: {0}")]
    WitnessInternal(String),
}

/// The sign of c₁e^{x₁} − c₂e^{x₂} for c₁, c₂ ∈ {−1,0,1}, computed exactly:
/// the only non-constant case compares the exponents.
pub fn scaled_exp_cmp(c1: i8, x1: &Rat, c2: i8, x2: &Rat) -> i8 {
    match (c1, c2) {
        (1, 1) => sign_of(&(x1 - x2)),
        (-1, -1) => sign_of(&(x2 - x1)),
        (0, 0) => 0,
        (1, _) => 1,   // e^{x1} − c2·e^{x2} with c2 ≤ 0
        (-1, _) => -1, // −e^{x1} − c2·e^{x2} with c2 ≥ 0
        (0, 1) => -1,
        (0, -1) => 1,
        _ => unreachable!(),
    }
}

/// Layout of the LP variable space: ρ (m entries), δ (n entries), then one
/// (α₊, α₋) pair per 𝒰₂ block.
#[derive(Debug, Clone)]
pub struct VarSpace {
    pub m: usize,
    pub n: usize,
    /// u2 block index → position in `aux`
    pub aux_of_block: Vec<Option<usize>>,
    pub names: Vec<String>,
}

impl VarSpace {
    pub fn new(red: &Reduction, n: usize) -> Self {
        let m = red.m();
        let mut names: Vec<String> = (1..=m).map(|i| format!("rho{i}")).collect();
        names.extend((1..=n).map(|i| format!("d{i}")));
        let mut aux_of_block = vec![None; red.l()];
        for (pos, &k) in red.u2.iter().enumerate() {
            aux_of_block[k] = Some(pos);
            names.push(format!("ap{}", k + 1));
            names.push(format!("am{}", k + 1));
        }
        VarSpace {
            m,
            n,
            aux_of_block,
            names,
        }
    }

    pub fn rho(&self, i: usize) -> usize {
        i
    }

    pub fn delta(&self, t: usize) -> usize {
        self.m + t
    }

    pub fn alpha_plus(&self, k: usize) -> usize {
        self.m + self.n + 2 * self.aux_of_block[k].unwrap()
    }

    pub fn alpha_minus(&self, k: usize) -> usize {
        self.alpha_plus(k) + 1
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn empty_system(&self) -> ConstraintSystem {
        ConstraintSystem::new(self.names.clone())
    }
}

/// Adds the linearization of sign(c₁e^{v₁} − c₂e^{v₂}) = target to `sys`;
/// returns false when the sign is constant and contradicts the target.
fn push_cmp_sign(
    sys: &mut ConstraintSystem,
    c1: i8,
    v1: usize,
    c2: i8,
    v2: usize,
    target: i8,
) -> bool {
    match (c1, c2) {
        (1, 1) | (-1, -1) => {
            // sign reduces to ±(v1 − v2)
            let flip = if c1 == 1 { 1i64 } else { -1 };
            let t = target as i64 * flip;
            match t {
                0 => sys.push_sparse(&[(v1, 1), (v2, -1)], Relation::Eq),
                1 => sys.push_sparse(&[(v1, 1), (v2, -1)], Relation::Gt),
                _ => sys.push_sparse(&[(v1, -1), (v2, 1)], Relation::Gt),
            }
            true
        }
        _ => {
            // constant sign, no ρ-dependence
            let zero = rat_int(0);
            scaled_exp_cmp(c1, &zero, c2, &zero) == target
        }
    }
}

/// Encodes sign(A_ρ^σ) = 𝒮 over ρ; `None` when a σ-forced sign contradicts
/// 𝒮 (the branch is dead).
pub fn encode_sign_conditions(
    p: &RatMatrix,
    sigma: &Orientation,
    smat: &SignMatrix,
    vars: &VarSpace,
) -> Option<ConstraintSystem> {
    let s = p.rows();
    let mut sys = vars.empty_system();
    for i in 0..s {
        for k in 0..p.cols() {
            let ps = sign_of(p.at(i, k));
            let (s1, s2) = sigma.sigma[k];
            let target = smat.at(i, k);
            match forced_sign(ps, s1, s2) {
                Some(v) => {
                    if v != target {
                        return None;
                    }
                }
                None => {
                    // σ column (±1,±1): sign = sign(P)·σ₁·sign(ρ_i − ρ_{s+k})
                    let t = target * ps * s1;
                    match t {
                        0 => sys.push_sparse(
                            &[(vars.rho(i), 1), (vars.rho(s + k), -1)],
                            Relation::Eq,
                        ),
                        1 => sys.push_sparse(
                            &[(vars.rho(i), 1), (vars.rho(s + k), -1)],
                            Relation::Gt,
                        ),
                        _ => sys.push_sparse(
                            &[(vars.rho(i), -1), (vars.rho(s + k), 1)],
                            Relation::Gt,
                        ),
                    }
                }
            }
        }
    }
    Some(sys)
}

/// Sparse row for (M⊤δ)_col − (coefficient · var).
fn mtd_row(
    sys_m: &RatMatrix,
    vars: &VarSpace,
    col: usize,
    var: usize,
    var_coeff: i64,
) -> Vec<(usize, Rat)> {
    let mut terms: Vec<(usize, Rat)> = Vec::new();
    for t in 0..sys_m.rows() {
        let c = sys_m.at(t, col);
        if !c.is_zero() {
            terms.push((vars.delta(t), c.clone()));
        }
    }
    terms.push((var, rat_int(var_coeff)));
    terms
}

/// Per-block options for placing `target_var` in the relative interior of
/// the interval spanned by (M⊤δ)_{s̄+j}, j ∈ `js`: either all values equal
/// the target, or the target lies strictly between an ordered pair.
fn interval_options(
    sys_m: &RatMatrix,
    sbar: usize,
    vars: &VarSpace,
    js: &[usize],
    target_var: usize,
    label: &str,
) -> Vec<(ConstraintSystem, String)> {
    let mut opts = Vec::new();
    let mut eq = vars.empty_system();
    for &j in js {
        eq.push_sparse_rat(&mtd_row(sys_m, vars, sbar + j, target_var, -1), Relation::Eq);
    }
    opts.push((eq, format!("{label}: all equal")));
    for &j1 in js {
        for &j2 in js {
            if j1 == j2 {
                continue;
            }
            let mut sysb = vars.empty_system();
            // target − (M⊤δ)_{s̄+j1} > 0
            let mut low = mtd_row(sys_m, vars, sbar + j1, target_var, 1);
            for t in low.iter_mut() {
                if t.0 != target_var {
                    t.1 = -t.1.clone();
                }
            }
            sysb.push_sparse_rat(&low, Relation::Gt);
            // (M⊤δ)_{s̄+j2} − target > 0
            sysb.push_sparse_rat(&mtd_row(sys_m, vars, sbar + j2, target_var, -1), Relation::Gt);
            opts.push((sysb, format!("{label}: between j{} and j{}", j1 + 1, j2 + 1)));
        }
    }
    opts
}

/// Encodes the oriented ground set for a fixed δ sign pattern as a
/// disjunction over the interval and sign-chain case splits.
pub fn encode_ground_set(
    red: &Reduction,
    sys: &AugmentedVerticalSystem,
    sigma: &Orientation,
    delta_sign: &[i8],
    vars: &VarSpace,
) -> Disjunction {
    let sbar = red.pbar.rows();
    let s = red.s();
    let m_mat = &sys.m;
    // base: δ sign pattern and the τ equalities ρ_u = (M⊤δ)_i
    let mut base = vars.empty_system();
    for (t, &sg) in delta_sign.iter().enumerate() {
        match sg {
            1 => base.push_sparse(&[(vars.delta(t), 1)], Relation::Gt),
            -1 => base.push_sparse(&[(vars.delta(t), -1)], Relation::Gt),
            _ => base.push_sparse(&[(vars.delta(t), 1)], Relation::Eq),
        }
    }
    for (u, block) in red.tau.iter().enumerate() {
        for &i in block {
            base.push_sparse_rat(&mtd_row(m_mat, vars, i, vars.rho(u), -1), Relation::Eq);
        }
    }
    // per-column-block options
    let mut block_opts: Vec<Vec<(ConstraintSystem, String)>> = Vec::new();
    for k in 0..red.l() {
        let js = &red.alpha[k];
        if red.u1.contains(&k) {
            block_opts.push(interval_options(
                m_mat,
                sbar,
                vars,
                js,
                vars.rho(s + k),
                &format!("U1 block {}", k + 1),
            ));
        } else {
            let jp: Vec<usize> = js.iter().copied().filter(|&j| sign_of(&red.gamma[j]) > 0).collect();
            let jn: Vec<usize> = js.iter().copied().filter(|&j| sign_of(&red.gamma[j]) < 0).collect();
            let ap = vars.alpha_plus(k);
            let am = vars.alpha_minus(k);
            let plus_opts = interval_options(m_mat, sbar, vars, &jp, ap, &format!("U2+ block {}", k + 1));
            let minus_opts = interval_options(m_mat, sbar, vars, &jn, am, &format!("U2- block {}", k + 1));
            let (s1, s2) = sigma.sigma[k];
            let mut combined = Vec::new();
            for (ps, pt) in &plus_opts {
                for (ms, mt) in &minus_opts {
                    for v in [1i8, 0, -1] {
                        let mut vs = vars.empty_system();
                        // sign(e^{α₊} − e^{α₋}) = v
                        match v {
                            1 => vs.push_sparse(&[(ap, 1), (am, -1)], Relation::Gt),
                            -1 => vs.push_sparse(&[(ap, -1), (am, 1)], Relation::Gt),
                            _ => vs.push_sparse(&[(ap, 1), (am, -1)], Relation::Eq),
                        }
                        if !push_cmp_sign(&mut vs, s2, vars.rho(s + k), s1, ap, v) {
                            continue;
                        }
                        if !push_cmp_sign(&mut vs, s2, vars.rho(s + k), s1, am, v) {
                            continue;
                        }
                        let conj = ps.conjoin(ms).conjoin(&vs);
                        combined.push((conj, format!("{pt}; {mt}; chain sign {v}")));
                    }
                }
            }
            block_opts.push(combined);
        }
    }
    // cartesian product over blocks
    let mut branches = vec![Branch {
        system: base,
        tag: String::new(),
    }];
    for opts in block_opts {
        let mut next = Vec::new();
        for b in &branches {
            for (osys, otag) in &opts {
                let tag = if b.tag.is_empty() {
                    otag.clone()
                } else {
                    format!("{}; {}", b.tag, otag)
                };
                next.push(Branch {
                    system: b.system.conjoin(osys),
                    tag,
                });
            }
        }
        branches = next;
    }
    Disjunction { branches }
}

/// Rows structurally eligible for I⁺ and I⁻ (the ρ-independent part of the
/// index-set definitions).
pub fn eligible_rows(lambda: &LambdaSets) -> (Vec<usize>, Vec<usize>) {
    let mut e_plus = Vec::new();
    let mut e_minus = Vec::new();
    for (i, row) in lambda.rows.iter().enumerate() {
        if row.pm.is_empty() && row.zm.is_empty() && !row.pp.is_empty() && !row.mm.is_empty() {
            e_plus.push(i);
        }
        if row.pp.is_empty() && row.zp.is_empty() && !row.mp.is_empty() && !row.pm.is_empty() {
            e_minus.push(i);
        }
    }
    (e_plus, e_minus)
}

/// σ₂ⱼ/σ₁ⱼ for a column with σ₁ⱼ ≠ 0 (σ₁ ∈ {±1}, so the ratio is σ₁σ₂).
fn sigma_ratio(sigma: &Orientation, j: usize) -> i8 {
    let (s1, s2) = sigma.sigma[j];
    debug_assert!(s1 != 0);
    s1 * s2
}

/// The Γ-intersection over the given rows: {μ > 0, P^σμ > 0,
/// Σ_{j∉Λ_i} P^σ_{ij} μ_j > 0 for each row}. Returns an exact witness.
pub fn gamma_intersection(
    p: &RatMatrix,
    sigma: &Orientation,
    lambda: &LambdaSets,
    rows: &[usize],
) -> Option<Vec<Rat>> {
    let ps = oriented_matrix(p, sigma);
    let l = p.cols();
    let names: Vec<String> = (1..=l).map(|k| format!("mu{k}")).collect();
    let mut sys = ConstraintSystem::new(names);
    for k in 0..l {
        sys.push_sparse(&[(k, 1)], Relation::Gt);
    }
    for i in 0..p.rows() {
        sys.push(ps.row(i).to_vec(), Relation::Gt);
    }
    for &i in rows {
        let lam = lambda.rows[i].lambda();
        let mut coeffs = vec![rat_int(0); l];
        for j in 0..l {
            if !lam.contains(&j) {
                coeffs[j] = ps.at(i, j).clone();
            }
        }
        sys.push(coeffs, Relation::Gt);
    }
    cone_feasible(&sys)
}

/// One case of the ¬𝒟 disjunction: ρ-constraints plus the μ-side obligation
/// already discharged (witness recorded) or deferred.
#[derive(Debug, Clone)]
pub struct NotDBranch {
    pub system: ConstraintSystem,
    pub tag: String,
    pub i_plus: Vec<usize>,
    pub i_minus: Vec<usize>,
    pub gamma_witness: Option<Vec<Rat>>,
    pub gamma_deferred: bool,
}

/// Strict violation options for an eligible row: pairs (j₁,j₂) with
/// r_{j₁}e^{ρ_{s+j₁}} > r_{j₂}e^{ρ_{s+j₂}}. Constant-true pairs give an
/// unconstrained option; constant-false pairs are dropped.
fn violation_options(
    sigma: &Orientation,
    vars: &VarSpace,
    s: usize,
    from: &[usize],
    to: &[usize],
) -> Vec<(ConstraintSystem, String)> {
    let mut opts = Vec::new();
    for &j1 in from {
        for &j2 in to {
            let mut sysb = vars.empty_system();
            if push_cmp_sign(
                &mut sysb,
                sigma_ratio(sigma, j1),
                vars.rho(s + j1),
                sigma_ratio(sigma, j2),
                vars.rho(s + j2),
                1,
            ) {
                opts.push((sysb, format!("violation ({},{})", j1 + 1, j2 + 1)));
            }
        }
    }
    opts
}

/// Non-strict membership constraints r_{j₁}e^{ρ_{s+j₁}} ≤ r_{j₂}e^{ρ_{s+j₂}}
/// for all pairs; `None` when a pair is constant-false.
fn membership_system(
    sigma: &Orientation,
    vars: &VarSpace,
    s: usize,
    from: &[usize],
    to: &[usize],
) -> Option<ConstraintSystem> {
    let mut sys = vars.empty_system();
    for &j1 in from {
        for &j2 in to {
            let r1 = sigma_ratio(sigma, j1);
            let r2 = sigma_ratio(sigma, j2);
            match (r1, r2) {
                (1, 1) => sys.push_sparse(
                    &[(vars.rho(s + j2), 1), (vars.rho(s + j1), -1)],
                    Relation::Ge,
                ),
                (-1, -1) => sys.push_sparse(
                    &[(vars.rho(s + j1), 1), (vars.rho(s + j2), -1)],
                    Relation::Ge,
                ),
                _ => {
                    // constant comparison: r1·e ≤ r2·e
                    let zero = rat_int(0);
                    if scaled_exp_cmp(r1, &zero, r2, &zero) > 0 {
                        return None;
                    }
                }
            }
        }
    }
    Some(sys)
}

/// Encodes the complement of the exclusion set 𝒟 as a disjunction: family A
/// forces I_ρ^± = ∅ by one strict violation per eligible row; family B fixes
/// a nonempty realizable pair (I⁺, I⁻), encodes exact membership, and
/// discharges the Γ-intersection obligation once per pair.
pub fn encode_not_d(
    p: &RatMatrix,
    sigma: &Orientation,
    lambda: &LambdaSets,
    vars: &VarSpace,
    defer_gamma: bool,
) -> Vec<NotDBranch> {
    let s = p.rows();
    let (e_plus, e_minus) = eligible_rows(lambda);
    let mut out = Vec::new();
    if e_plus.is_empty() && e_minus.is_empty() {
        out.push(NotDBranch {
            system: vars.empty_system(),
            tag: "no eligible rows".into(),
            i_plus: vec![],
            i_minus: vec![],
            gamma_witness: None,
            gamma_deferred: false,
        });
        return out;
    }
    let row_violations = |i: usize, plus: bool| -> Vec<(ConstraintSystem, String)> {
        let row = &lambda.rows[i];
        if plus {
            violation_options(sigma, vars, s, &row.pp, &row.mm)
        } else {
            violation_options(sigma, vars, s, &row.mp, &row.pm)
        }
    };
    // family A: all eligible rows violated
    let all_eligible: Vec<(usize, bool)> = e_plus
        .iter()
        .map(|&i| (i, true))
        .chain(e_minus.iter().map(|&i| (i, false)))
        .collect();
    let mut fam_a = vec![(vars.empty_system(), String::from("A"))];
    for &(i, plus) in &all_eligible {
        let opts = row_violations(i, plus);
        let mut next = Vec::new();
        for (bs, bt) in &fam_a {
            for (os, ot) in &opts {
                next.push((bs.conjoin(os), format!("{bt}; row {}: {ot}", i + 1)));
            }
        }
        fam_a = next;
    }
    for (sysb, tag) in fam_a {
        out.push(NotDBranch {
            system: sysb,
            tag,
            i_plus: vec![],
            i_minus: vec![],
            gamma_witness: None,
            gamma_deferred: false,
        });
    }
    // family B: nonempty (I⁺, I⁻) with exact membership
    let np = e_plus.len();
    let nm = e_minus.len();
    for mask_p in 0..(1usize << np) {
        'mask: for mask_m in 0..(1usize << nm) {
            if mask_p == 0 && mask_m == 0 {
                continue;
            }
            let i_plus: Vec<usize> = e_plus
                .iter()
                .enumerate()
                .filter(|(b, _)| mask_p >> b & 1 == 1)
                .map(|(_, &i)| i)
                .collect();
            let i_minus: Vec<usize> = e_minus
                .iter()
                .enumerate()
                .filter(|(b, _)| mask_m >> b & 1 == 1)
                .map(|(_, &i)| i)
                .collect();
            let mut included: Vec<usize> = i_plus.iter().chain(&i_minus).copied().collect();
            included.sort_unstable();
            let gamma_witness = if defer_gamma {
                None
            } else {
                match gamma_intersection(p, sigma, lambda, &included) {
                    Some(w) => Some(w),
                    None => continue, // Γ-infeasible pair: drop
                }
            };
            let mut sysb = vars.empty_system();
            for &i in &i_plus {
                let row = &lambda.rows[i];
                match membership_system(sigma, vars, s, &row.pp, &row.mm) {
                    Some(ms) => sysb = sysb.conjoin(&ms),
                    None => continue 'mask,
                }
            }
            for &i in &i_minus {
                let row = &lambda.rows[i];
                match membership_system(sigma, vars, s, &row.mp, &row.pm) {
                    Some(ms) => sysb = sysb.conjoin(&ms),
                    None => continue 'mask,
                }
            }
            // excluded eligible rows must be strictly violated
            let mut partial = vec![(sysb, format!("B I+={i_plus:?} I-={i_minus:?}"))];
            for &(i, plus) in &all_eligible {
                let in_set = if plus {
                    i_plus.contains(&i)
                } else {
                    i_minus.contains(&i)
                };
                if in_set {
                    continue;
                }
                let opts = row_violations(i, plus);
                let mut next = Vec::new();
                for (bs, bt) in &partial {
                    for (os, ot) in &opts {
                        next.push((bs.conjoin(os), format!("{bt}; row {}: {ot}", i + 1)));
                    }
                }
                partial = next;
            }
            for (bsys, tag) in partial {
                out.push(NotDBranch {
                    system: bsys,
                    tag,
                    i_plus: i_plus.clone(),
                    i_minus: i_minus.clone(),
                    gamma_witness: gamma_witness.clone(),
                    gamma_deferred: defer_gamma,
                });
            }
        }
    }
    out
}

/// Exact I_ρ^± at a rational ρ, straight from the definition.
pub fn i_sets_at(
    sigma: &Orientation,
    lambda: &LambdaSets,
    s: usize,
    rho: &[Rat],
) -> (Vec<usize>, Vec<usize>) {
    let (e_plus, e_minus) = eligible_rows(lambda);
    let le = |j1: usize, j2: usize| {
        scaled_exp_cmp(
            sigma_ratio(sigma, j1),
            &rho[s + j1],
            sigma_ratio(sigma, j2),
            &rho[s + j2],
        ) <= 0
    };
    let i_plus = e_plus
        .into_iter()
        .filter(|&i| {
            let row = &lambda.rows[i];
            row.pp.iter().all(|&j1| row.mm.iter().all(|&j2| le(j1, j2)))
        })
        .collect();
    let i_minus = e_minus
        .into_iter()
        .filter(|&i| {
            let row = &lambda.rows[i];
            row.mp.iter().all(|&j1| row.pm.iter().all(|&j2| le(j1, j2)))
        })
        .collect();
    (i_plus, i_minus)
}

/// Direct-definition membership test for the exclusion set 𝒟.
pub fn in_exclusion_set(
    p: &RatMatrix,
    sigma: &Orientation,
    lambda: &LambdaSets,
    rho: &[Rat],
) -> bool {
    let (ip, im) = i_sets_at(sigma, lambda, p.rows(), rho);
    if ip.is_empty() && im.is_empty() {
        return false;
    }
    let mut rows: Vec<usize> = ip.iter().chain(&im).copied().collect();
    rows.sort_unstable();
    gamma_intersection(p, sigma, lambda, &rows).is_none()
}

/// Exact sign of (A_ρ^σ)_{ik} at a rational ρ.
pub fn a_sign_at(p: &RatMatrix, sigma: &Orientation, rho: &[Rat], i: usize, k: usize) -> i8 {
    let s = p.rows();
    let (s1, s2) = sigma.sigma[k];
    sign_of(p.at(i, k)) * scaled_exp_cmp(s1, &rho[i], s2, &rho[s + k])
}

#[derive(Debug, Clone)]
pub struct Certificate {
    pub sigma: Orientation,
    pub s_matrix: SignMatrix,
    /// Exact ρ for the simplified system (length s + ℓ).
    pub rho: Vec<Rat>,
    /// Exact δ (length n) with sign pattern `delta_sign`.
    pub delta: Vec<Rat>,
    pub delta_sign: Vec<i8>,
    /// Exact z ∈ ker(L) with sign(z) = delta_sign.
    pub kernel_witness: Vec<Rat>,
    /// (α₊, α₋) per 𝒰₂ block, in `u2` order.
    pub aux: Vec<(Rat, Rat)>,
    pub branch_trace: Vec<String>,
    pub sigma_index: usize,
    pub s_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerdictKind {
    Precluded,
    Multiple,
    MultipleNumeric,
    Inconclusive,
}

#[derive(Debug, Clone, Default)]
pub struct Stats {
    pub orientations: usize,
    pub sign_matrices: usize,
    pub lp_calls: usize,
    pub branches: usize,
}

#[derive(Default)]
struct Counters {
    orientations: AtomicUsize,
    sign_matrices: AtomicUsize,
    lp_calls: AtomicUsize,
    branches: AtomicUsize,
}

impl Counters {
    fn snapshot(&self) -> Stats {
        Stats {
            orientations: self.orientations.load(Ordering::Relaxed),
            sign_matrices: self.sign_matrices.load(Ordering::Relaxed),
            lp_calls: self.lp_calls.load(Ordering::Relaxed),
            branches: self.branches.load(Ordering::Relaxed),
        }
    }
}

#[derive(Debug)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub certificates: Vec<Certificate>,
    pub witness: Option<Witness>,
    pub report: Option<VerifyReport>,
    pub stats: Stats,
    pub reduction: Reduction,
    pub pbar_forest: bool,
    pub p_forest: bool,
}

#[derive(Debug, Clone)]
pub struct EngineOptions {
    pub mode: PartitionMode,
    pub precision: u32,
    pub construct_witness: bool,
    pub defer_gamma_check: bool,
    pub parallel: bool,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            mode: PartitionMode::Maximal,
            precision: 128,
            construct_witness: true,
            defer_gamma_check: false,
            parallel: true,
        }
    }
}

/// Searches the feasible ground set of one (σ, 𝒮) pair: iterates realizable
/// δ sign vectors, conjoins the sign conditions with one ¬𝒟 branch (family A
/// before B) and one ground-set branch, and returns the first exact rational
/// solution as a certificate.
pub fn feasible_ground_set_search(
    sys: &AugmentedVerticalSystem,
    red: &Reduction,
    sigma: &Orientation,
    smat: &SignMatrix,
    defer_gamma: bool,
    counters: &Counters_,
) -> Option<Certificate> {
    let vars = VarSpace::new(red, sys.n());
    let sign_sys = encode_sign_conditions(&red.p, sigma, smat, &vars)?;
    let lambda = lambda_sets(&red.p, sigma, smat);
    let not_d = encode_not_d(&red.p, sigma, &lambda, &vars, defer_gamma);
    let s = red.s();
    for (delta_sign, z) in realizable_sign_vectors(&sys.l) {
        counters.0.lp_calls.fetch_add(1, Ordering::Relaxed); // the sign-vector DFS LP
        let ground = encode_ground_set(red, sys, sigma, &delta_sign, &vars);
        for nb in &not_d {
            for gb in &ground.branches {
                counters.0.branches.fetch_add(1, Ordering::Relaxed);
                let conj = sign_sys.conjoin(&nb.system).conjoin(&gb.system);
                counters.0.lp_calls.fetch_add(1, Ordering::Relaxed);
                let Some(point) = cone_feasible(&conj) else {
                    continue;
                };
                if nb.gamma_deferred && !nb.i_plus.is_empty() || nb.gamma_deferred && !nb.i_minus.is_empty() {
                    let mut rows: Vec<usize> =
                        nb.i_plus.iter().chain(&nb.i_minus).copied().collect();
                    rows.sort_unstable();
                    if gamma_intersection(&red.p, sigma, &lambda, &rows).is_none() {
                        continue;
                    }
                }
                let rho: Vec<Rat> = (0..red.m()).map(|i| point[vars.rho(i)].clone()).collect();
                let delta: Vec<Rat> = (0..sys.n()).map(|t| point[vars.delta(t)].clone()).collect();
                let aux: Vec<(Rat, Rat)> = red
                    .u2
                    .iter()
                    .map(|&k| {
                        (
                            point[vars.alpha_plus(k)].clone(),
                            point[vars.alpha_minus(k)].clone(),
                        )
                    })
                    .collect();
                debug_assert!((0..s).all(|i| {
                    (0..red.l()).all(|k| a_sign_at(&red.p, sigma, &rho, i, k) == smat.at(i, k))
                }));
                return Some(Certificate {
                    sigma: sigma.clone(),
                    s_matrix: smat.clone(),
                    rho,
                    delta,
                    delta_sign: delta_sign.clone(),
                    kernel_witness: z,
                    aux,
                    branch_trace: vec![nb.tag.clone(), gb.tag.clone()],
                    sigma_index: 0,
                    s_index: 0,
                });
            }
        }
    }
    None
}

/// Newtype so the counters can cross the public search API without exposing
/// atomics in the signature.
pub struct Counters_(Counters);

impl Default for Counters_ {
    fn default() -> Self {
        Counters_(Counters::default())
    }
}

/// The full decision pipeline.
pub fn decide(sys: &AugmentedVerticalSystem, opts: &EngineOptions) -> Result<Verdict, EngineError> {
    let counters = Counters_::default();
    let pbar = reduced_matrix(sys)?;
    let red = compute_partitions(&pbar, opts.mode);
    let (pbar_forest, _) = induces_forest(&pbar);
    let (p_forest, _) = induces_forest(&red.p);
    let verdict = |kind, certificates, witness, report, counters: &Counters_| Verdict {
        kind,
        certificates,
        witness,
        report,
        stats: counters.0.snapshot(),
        reduction: red.clone(),
        pbar_forest,
        p_forest,
    };
    // precheck: no μ > 0 with P̄μ > 0 means no positive zeros at all
    counters.0.lp_calls.fetch_add(1, Ordering::Relaxed);
    if red.negative_row_proportionality || mu_positive_witness(&pbar).is_none() {
        return Ok(verdict(VerdictKind::Precluded, vec![], None, None, &counters));
    }
    // enumerate (σ, 𝒮) pairs; evaluate in deterministic chunks
    let mut pairs: Vec<(usize, Orientation, usize, SignMatrix)> = Vec::new();
    for (si, sigma) in enumerate_orientations(&red).enumerate() {
        counters.0.orientations.fetch_add(1, Ordering::Relaxed);
        counters.0.lp_calls.fetch_add(1, Ordering::Relaxed);
        if mu_positive_witness(&oriented_matrix(&red.p, &sigma)).is_none() {
            continue;
        }
        for (ki, smat) in enumerate_sign_matrices(&red.p, &sigma).enumerate() {
            counters.0.sign_matrices.fetch_add(1, Ordering::Relaxed);
            pairs.push((si, sigma.clone(), ki, smat));
        }
    }
    let mut certificates: Vec<Certificate> = Vec::new();
    let chunk_size = 64;
    for chunk in pairs.chunks(chunk_size) {
        let found: Vec<Option<Certificate>> = if opts.parallel {
            chunk
                .par_iter()
                .map(|(si, sigma, ki, smat)| {
                    feasible_ground_set_search(
                        sys,
                        &red,
                        sigma,
                        smat,
                        opts.defer_gamma_check,
                        &counters,
                    )
                    .map(|mut c| {
                        c.sigma_index = *si;
                        c.s_index = *ki;
                        c
                    })
                })
                .collect()
        } else {
            chunk
                .iter()
                .map(|(si, sigma, ki, smat)| {
                    feasible_ground_set_search(
                        sys,
                        &red,
                        sigma,
                        smat,
                        opts.defer_gamma_check,
                        &counters,
                    )
                    .map(|mut c| {
                        c.sigma_index = *si;
                        c.s_index = *ki;
                        c
                    })
                })
                .collect()
        };
        // process in lexicographic order
        for cert in found.into_iter().flatten() {
            if p_forest {
                if !opts.construct_witness {
                    return Ok(verdict(
                        VerdictKind::Multiple,
                        vec![cert],
                        None,
                        None,
                        &counters,
                    ));
                }
                match witness::construct_forest(&cert, &red, sys, opts.precision) {
                    Ok((w, rep)) => {
                        if !rep.pass {
                            return Err(EngineError::WitnessInternal(format!(
                                "verification report failed: {rep:?}"
                            )));
                        }
                        return Ok(verdict(
                            VerdictKind::Multiple,
                            vec![cert],
                            Some(w),
                            Some(rep),
                            &counters,
                        ));
                    }
                    Err(WitnessError::PrecisionExhausted(msg)) => {
                        // retry once at doubled precision before giving up
                        match witness::construct_forest(&cert, &red, sys, opts.precision * 2) {
                            Ok((w, rep)) if rep.pass => {
                                return Ok(verdict(
                                    VerdictKind::Multiple,
                                    vec![cert],
                                    Some(w),
                                    Some(rep),
                                    &counters,
                                ));
                            }
                            _ => {
                                return Err(EngineError::WitnessInternal(msg));
                            }
                        }
                    }
                    Err(e) => return Err(EngineError::WitnessInternal(e.to_string())),
                }
            } else {
                if opts.construct_witness {
                    if let Ok((w, rep)) =
                        witness::construct_numeric(&cert, &red, sys, opts.precision)
                    {
                        if rep.pass {
                            return Ok(verdict(
                                VerdictKind::MultipleNumeric,
                                vec![cert],
                                Some(w),
                                Some(rep),
                                &counters,
                            ));
                        }
                    }
                }
                certificates.push(cert);
            }
        }
    }
    if certificates.is_empty() {
        Ok(verdict(VerdictKind::Precluded, vec![], None, None, &counters))
    } else {
        Ok(verdict(
            VerdictKind::Inconclusive,
            certificates,
            None,
            None,
            &counters,
        ))
    }
}

/// Witness for {μ > 0, Bμ > 0}, or None.
pub fn mu_positive_witness(b: &RatMatrix) -> Option<Vec<Rat>> {
    let l = b.cols();
    let names: Vec<String> = (1..=l).map(|k| format!("mu{k}")).collect();
    let mut sys = ConstraintSystem::new(names);
    for k in 0..l {
        sys.push_sparse(&[(k, 1)], Relation::Gt);
    }
    for i in 0..b.rows() {
        sys.push(b.row(i).to_vec(), Relation::Gt);
    }
    cone_feasible(&sys)
}

/// Classifies a rational ρ via the branch encoding: ρ lies outside 𝒟 iff
/// some ¬𝒟 branch accepts it (its ρ-rows hold and its Γ obligation is
/// satisfiable).
pub fn outside_d_by_branches(
    p: &RatMatrix,
    sigma: &Orientation,
    lambda: &LambdaSets,
    rho: &[Rat],
    n: usize,
    red: &Reduction,
) -> bool {
    let vars = VarSpace::new(red, n);
    let branches = encode_not_d(p, sigma, lambda, &vars, false);
    let mut point = vec![rat_int(0); vars.len()];
    for (i, v) in rho.iter().enumerate() {
        point[vars.rho(i)] = v.clone();
    }
    branches.iter().any(|b| b.system.satisfied_by(&point))
}
