//! The lifted coframe of the contact pseudo-group on second-order jets for
//! general `n`, its structure-equation existence checks, the explicit reduced
//! Maurer–Cartan forms of the heavenly equation's symmetry pseudo-group, and
//! the derivation of the generating Wahlquist–Estabrook form from them.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use crate::covering::CoveringContext;
use crate::forms::{
    express_in_span, parse_form, solve_structure, Form, FormError, GeneratorSet,
    GeneratorSetBuilder, SolveOutcome,
};
use crate::jets::{ContactChart, JetError};
use crate::report::{timed, Report};
use crate::symexpr::{Poly, Scalar, Var};

fn det(m: &[Vec<Poly>]) -> Poly {
    let n = m.len();
    if n == 1 {
        return m[0][0].clone();
    }
    let mut out = Poly::zero();
    for k in 0..n {
        let sub: Vec<Vec<Poly>> = m[1..]
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|&(c, _)| c != k)
                    .map(|(_, p)| p.clone())
                    .collect()
            })
            .collect();
        let term = m[0][k].mul(&det(&sub));
        out = if k % 2 == 0 { out.add(&term) } else { out.sub(&term) };
    }
    out
}

/// The coframe `Theta_0, Theta_i, Xi^i, Sigma_ij` on `J^2 x H`, parameterized
/// by the group chart `a, b^i_k, c^i, f^ik, g_i, s_ij, w^k_ij, z_ijk` with
/// `a != 0` and `det(b) != 0` held generically.
pub struct LiftedCoframe {
    pub n: usize,
    pub chart: ContactChart,
    pub a: Var,
    b: Vec<Vec<Var>>,
    symmetric_f: bool,
    pub theta0: Form,
    /// `Theta_1 .. Theta_n`.
    pub thetas: Vec<Form>,
    /// `Xi^1 .. Xi^n`.
    pub xis: Vec<Form>,
    sigmas: BTreeMap<(usize, usize), Form>,
    b_inv: Vec<Vec<Scalar>>,
}

impl LiftedCoframe {
    pub fn new(n: usize) -> Result<LiftedCoframe, JetError> {
        LiftedCoframe::build(n, true, 4)
    }

    /// Negative control: the `f^ik` parameters are made independent instead
    /// of symmetric, which breaks the first structure identity.
    pub fn desymmetrized(n: usize) -> Result<LiftedCoframe, JetError> {
        LiftedCoframe::build(n, false, 4)
    }

    pub fn with_degree_cap(n: usize, cap: u32) -> Result<LiftedCoframe, JetError> {
        LiftedCoframe::build(n, true, cap)
    }

    fn build(n: usize, symmetric_f: bool, cap: u32) -> Result<LiftedCoframe, JetError> {
        if !(1..=4).contains(&n) {
            return Err(JetError::OutOfRange {
                what: format!("lifted coframe dimension n={n}"),
            });
        }
        let a = Var::new("a");
        let b: Vec<Vec<Var>> = (1..=n)
            .map(|i| (1..=n).map(|k| Var::new(&format!("b{i}{k}"))).collect())
            .collect();
        let c: Vec<Var> = (1..=n).map(|i| Var::new(&format!("c{i}"))).collect();
        let f_name = |i: usize, k: usize| {
            if symmetric_f {
                let (i, k) = if i <= k { (i, k) } else { (k, i) };
                format!("f{i}{k}")
            } else {
                format!("f{i}{k}")
            }
        };
        let g: Vec<Var> = (1..=n).map(|i| Var::new(&format!("g{i}"))).collect();

        let mut extras = vec![a];
        for row in &b {
            extras.extend(row.iter().copied());
        }
        extras.extend(c.iter().copied());
        for i in 1..=n {
            for k in 1..=n {
                if symmetric_f && k < i {
                    continue;
                }
                extras.push(Var::new(&f_name(i, k)));
            }
        }
        extras.extend(g.iter().copied());
        for i in 1..=n {
            for j in i..=n {
                extras.push(Var::new(&format!("s{i}{j}")));
            }
        }
        for k in 1..=n {
            for i in 1..=n {
                for j in i..=n {
                    extras.push(Var::new(&format!("w{k}_{i}{j}")));
                }
            }
        }
        for i in 1..=n {
            for j in i..=n {
                for k in j..=n {
                    extras.push(Var::new(&format!("z{i}{j}{k}")));
                }
            }
        }
        let chart = ContactChart::new(n, &extras, cap)?;
        let gs = &chart.gs;

        // inverse of the b-matrix: adjugate over determinant
        let bpoly: Vec<Vec<Poly>> = b
            .iter()
            .map(|row| row.iter().map(|&v| Poly::var(v)).collect())
            .collect();
        let delta = det(&bpoly);
        let mut b_inv = vec![vec![Scalar::zero(); n]; n];
        for k in 0..n {
            for i in 0..n {
                // B[k][i] = (-1)^{i+k} * minor(i, k) / det
                let minor: Vec<Vec<Poly>> = bpoly
                    .iter()
                    .enumerate()
                    .filter(|&(r, _)| r != i)
                    .map(|(_, row)| {
                        row.iter()
                            .enumerate()
                            .filter(|&(cc, _)| cc != k)
                            .map(|(_, p)| p.clone())
                            .collect()
                    })
                    .collect();
                let cof = if n == 1 { Poly::one() } else { det(&minor) };
                let signed = if (i + k) % 2 == 0 { cof } else { cof.neg() };
                b_inv[k][i] = Scalar::normalize(signed, delta.clone())?;
            }
        }

        let sa = Scalar::var(a);
        let theta0 = chart.thetas[0].scale(&sa);
        let mut thetas = Vec::with_capacity(n);
        for i in 1..=n {
            let mut th = theta0.scale(&Scalar::var(g[i - 1]));
            for k in 1..=n {
                th = th.add(&chart.thetas[k].scale(&sa.mul(&b_inv[k - 1][i - 1])));
            }
            thetas.push(th);
        }
        let mut xis = Vec::with_capacity(n);
        for i in 1..=n {
            let mut xi = theta0.scale(&Scalar::var(c[i - 1]));
            for k in 1..=n {
                xi = xi.add(&thetas[k - 1].scale(&Scalar::var(Var::new(&f_name(i, k)))));
            }
            for k in 1..=n {
                let dxk = Form::differential(gs, chart.x[k - 1])?;
                xi = xi.add(&dxk.scale(&Scalar::var(b[i - 1][k - 1])));
            }
            xis.push(xi);
        }
        let mut sigmas = BTreeMap::new();
        for i in 1..=n {
            for j in i..=n {
                let mut sg = theta0.scale(&Scalar::var(Var::new(&format!("s{i}{j}"))));
                for k in 1..=n {
                    sg = sg.add(&thetas[k - 1].scale(&Scalar::var(Var::new(&format!("w{k}_{i}{j}")))));
                }
                for k in 1..=n {
                    let mut idx = [i, j, k];
                    idx.sort_unstable();
                    let z = Var::new(&format!("z{}{}{}", idx[0], idx[1], idx[2]));
                    sg = sg.add(&xis[k - 1].scale(&Scalar::var(z)));
                }
                for k in 1..=n {
                    for l in 1..=n {
                        let dukl = Form::differential(gs, chart.u2(k, l))?;
                        let coeff = sa.mul(&b_inv[k - 1][i - 1]).mul(&b_inv[l - 1][j - 1]);
                        sg = sg.add(&dukl.scale(&coeff));
                    }
                }
                sigmas.insert((i, j), sg);
            }
        }
        Ok(LiftedCoframe {
            n,
            chart,
            a,
            b,
            symmetric_f,
            theta0,
            thetas,
            xis,
            sigmas,
            b_inv,
        })
    }

    /// `Sigma_ij = Sigma_ji`, 1-based.
    pub fn sigma(&self, i: usize, j: usize) -> &Form {
        let key = if i <= j { (i, j) } else { (j, i) };
        &self.sigmas[&key]
    }

    pub fn sigma_count(&self) -> usize {
        self.sigmas.len()
    }

    pub fn b_var(&self, i: usize, k: usize) -> Var {
        self.b[i - 1][k - 1]
    }

    /// Exact inverse-matrix entry `B^k_i`.
    pub fn b_inverse(&self, k: usize, i: usize) -> &Scalar {
        &self.b_inv[k - 1][i - 1]
    }

    /// `(d Theta_0 - Xi^i ^ Theta_i) ^ Theta_0`, identically zero for the
    /// symmetric chart.
    pub fn theta0_structure_residual(&self) -> Result<Form, JetError> {
        let mut r = self.theta0.exterior_derivative()?;
        for i in 0..self.n {
            r = r.sub(&self.xis[i].wedge(&self.thetas[i])?);
        }
        Ok(r.wedge(&self.theta0)?)
    }

    /// `d Theta_i - Xi^k ^ Sigma_ik` solved against the module generated by
    /// `Theta_0 .. Theta_n`.
    pub fn theta_solve(&self, i: usize) -> Result<SolveOutcome, JetError> {
        let mut r = self.thetas[i - 1].exterior_derivative()?;
        for k in 1..=self.n {
            r = r.sub(&self.xis[k - 1].wedge(self.sigma(i, k))?);
        }
        let mut knowns = vec![self.theta0.clone()];
        knowns.extend(self.thetas.iter().cloned());
        let knowns: Vec<Form> = knowns.iter().map(Form::cleared_denominators).collect();
        Ok(solve_structure(&r.cleared_denominators(), &knowns)?)
    }

    /// `d Xi^i` solved against the module generated by `Xi^k, Theta_0,
    /// Theta_k`.
    pub fn xi_solve(&self, i: usize) -> Result<SolveOutcome, JetError> {
        let r = self.xis[i - 1].exterior_derivative()?;
        let mut knowns: Vec<Form> = self.xis.clone();
        knowns.push(self.theta0.clone());
        knowns.extend(self.thetas.iter().cloned());
        let knowns: Vec<Form> = knowns.iter().map(Form::cleared_denominators).collect();
        Ok(solve_structure(&r.cleared_denominators(), &knowns)?)
    }

    /// `d Sigma_ij` solved against the module generated by all `Sigma_kl`,
    /// `Theta_0`, `Theta_k` and `Xi^k`.
    pub fn sigma_solve(&self, i: usize, j: usize) -> Result<SolveOutcome, JetError> {
        let r = self.sigma(i, j).exterior_derivative()?;
        let mut knowns: Vec<Form> = self.sigmas.values().cloned().collect();
        knowns.push(self.theta0.clone());
        knowns.extend(self.thetas.iter().cloned());
        knowns.extend(self.xis.iter().cloned());
        let knowns: Vec<Form> = knowns.iter().map(Form::cleared_denominators).collect();
        Ok(solve_structure(&r.cleared_denominators(), &knowns)?)
    }
}

fn outcome_report(id: String, outcome: Result<SolveOutcome, JetError>, elapsed: u64, config: &str) -> Report {
    let mut rep = match outcome {
        Ok(SolveOutcome::Solved(_)) => Report::pass(id),
        Ok(SolveOutcome::Unsolvable { remainder }) => Report::fail(id, remainder.to_string()),
        Err(e) => Report::fail(id, e.to_string()),
    };
    rep.elapsed_ms = elapsed;
    rep.config = config.to_string();
    rep
}

/// Verifies the existence claims of the structure equations of the contact
/// pseudo-group at dimension `n`: one report per lifted-coframe member.
pub fn check_cont_structure(n: usize) -> Result<Vec<Report>, JetError> {
    let lc = LiftedCoframe::new(n)?;
    let config = format!("n={n}");
    let mut out = Vec::new();

    let (res, ms) = timed(|| lc.theta0_structure_residual());
    let id = format!("cont-structure/n{n}/theta0");
    let mut rep = match res {
        Ok(f) if f.is_zero() => Report::pass(id),
        Ok(f) => Report::fail(id, f.to_string()),
        Err(e) => Report::fail(id, e.to_string()),
    };
    rep.elapsed_ms = ms;
    rep.config = config.clone();
    out.push(rep);

    for i in 1..=n {
        let (res, ms) = timed(|| lc.theta_solve(i));
        out.push(outcome_report(
            format!("cont-structure/n{n}/theta{i}"),
            res,
            ms,
            &config,
        ));
    }
    for i in 1..=n {
        let (res, ms) = timed(|| lc.xi_solve(i));
        out.push(outcome_report(
            format!("cont-structure/n{n}/xi{i}"),
            res,
            ms,
            &config,
        ));
    }
    for i in 1..=n {
        for j in i..=n {
            let (res, ms) = timed(|| lc.sigma_solve(i, j));
            out.push(outcome_report(
                format!("cont-structure/n{n}/sigma{i}{j}"),
                res,
                ms,
                &config,
            ));
        }
    }
    Ok(out)
}

/// The reduced Maurer–Cartan forms of the symmetry pseudo-group, written in
/// the coordinates `t, x, y, z`, the second jets of `u`, the parameters
/// `b11, b14, b41, b44, v, w, r1, r2` and their differentials; the spectral
/// parameter is a formal constant.
pub struct ReducedMCForms {
    pub gs: Arc<GeneratorSet>,
    /// `xi^1 .. xi^4`.
    pub xi: Vec<Form>,
    pub eta1: Form,
    pub eta4: Form,
    pub eta5: Form,
    pub lambda: Var,
}

pub fn build_reduced_forms() -> Result<ReducedMCForms, JetError> {
    let lambda = Var::new("lambda");
    let mut b = GeneratorSetBuilder::new();
    for name in [
        "t", "x", "y", "z", "u_xx", "u_xy", "u_yy", "b11", "b14", "b41", "b44", "v", "w", "r1",
        "r2", "q_0_0", "q_1_0", "q_0_1",
    ] {
        b.coordinate(Var::new(name));
    }
    b.constant(lambda);
    b.degree_cap(4);
    let gs = b.build()?;

    let p = |text: &str| -> Result<Form, JetError> {
        parse_form(&gs, text).map_err(|e| JetError::Form(FormError::UnknownGenerator {
            name: format!("parse failure in reduced form: {e}"),
        }))
    };
    let xi1 = p("b11 d(t) + b14 d(z)")?;
    let xi2 = p(
        "(1/v)*(b11 d(x) + b14 d(y) \
          - (b11*(w - 1)*u_xy + b14*u_xx + b41*v) d(t) \
          - (b14*(w + 1)*u_xy - b11*u_yy + b44*v) d(z))",
    )?;
    let xi3 = p(
        "(1/v)*(b41 d(x) + b44 d(y) \
          + (b11*v - b41*(w - 1)*u_xy - b44*u_xx) d(t) \
          + (b14*v - b44*(w + 1)*u_xy + b41*u_yy) d(z))",
    )?;
    let xi4 = p("b41 d(t) + b44 d(z)")?;
    let delta = "(b11*b44 - b14*b41)";
    let eta1_core = p(&format!("(b44 d(b11) - b41 d(b14)) / {delta}"))?;
    let eta4_core = p(&format!("(b11 d(b44) - b14 d(b41)) / {delta}"))?;
    let r1 = Scalar::var(Var::new("r1"));
    let r2 = Scalar::var(Var::new("r2"));
    let r_part = xi1.scale(&r1).add(&xi4.scale(&r2));
    let eta1 = eta1_core.add(&r_part);
    let eta4 = eta4_core.sub(&r_part);
    let eta5 = p("-3*(1/v) d(v)")?.add(&eta1).add(&eta4);
    Ok(ReducedMCForms {
        gs,
        xi: vec![xi1, xi2, xi3, xi4],
        eta1,
        eta4,
        eta5,
        lambda,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TheoremBranch {
    /// `v = q_0_0`, `b11 = q_1_0`, `b14 = q_0_1` into
    /// `(1/3)(eta1 + eta4 - eta5) - xi^2 - xi^4`.
    One,
    /// `v = q_0_0`, `b41 = q_1_0`, `b44 = q_0_1` into
    /// `(1/3)(eta1 + eta4 - eta5) + xi^1 - xi^3`.
    Two,
}

impl TheoremBranch {
    pub fn number(self) -> u8 {
        match self {
            TheoremBranch::One => 1,
            TheoremBranch::Two => 2,
        }
    }
}

impl ReducedMCForms {
    /// `(1/3)(eta1 + eta4 - eta5)`, which collapses to `dv / v`.
    pub fn log_volume_form(&self) -> Form {
        self.eta1
            .add(&self.eta4)
            .sub(&self.eta5)
            .scale(&Scalar::rational(1, 3))
    }

    /// The substituted linear combination of one theorem branch, with an
    /// explicit image for the parameter `w` (the theorem uses
    /// `w = lambda / u_xy`; anything else is a negative control).
    pub fn substituted_combination(
        &self,
        branch: TheoremBranch,
        w_image: &Scalar,
    ) -> Result<Form, JetError> {
        let combo = match branch {
            TheoremBranch::One => self
                .log_volume_form()
                .sub(&self.xi[1])
                .sub(&self.xi[3]),
            TheoremBranch::Two => self.log_volume_form().add(&self.xi[0]).sub(&self.xi[2]),
        };
        let (bx, by) = match branch {
            TheoremBranch::One => ("b11", "b14"),
            TheoremBranch::Two => ("b41", "b44"),
        };
        let mut sm = HashMap::new();
        let mut gm = HashMap::new();
        let mut remap = |from: &str, to: &str| -> Result<(), JetError> {
            let fv = Var::new(from);
            let tv = Var::new(to);
            sm.insert(fv, Scalar::var(tv));
            gm.insert(
                self.gs.coordinate_index(fv).expect("chart coordinate"),
                Form::differential(&self.gs, tv)?,
            );
            Ok(())
        };
        remap("v", "q_0_0")?;
        remap(bx, "q_1_0")?;
        remap(by, "q_0_1")?;
        let wv = Var::new("w");
        sm.insert(wv, w_image.clone());
        gm.insert(
            self.gs.coordinate_index(wv).expect("chart coordinate"),
            crate::forms::differential_of_scalar(&self.gs, w_image)?,
        );
        Ok(combo.substitute(&sm, &gm)?)
    }

    /// Residual of one theorem branch: the substituted combination minus
    /// `q_0_0^{-1} omega_0_0`. Zero identically in all surviving parameters.
    pub fn theorem_residual(
        &self,
        branch: TheoremBranch,
        cov: &CoveringContext,
    ) -> Result<Form, JetError> {
        if cov.lambda() != self.lambda {
            return Err(JetError::OutOfRange {
                what: format!(
                    "spectral parameter mismatch: covering uses `{}`",
                    cov.lambda()
                ),
            });
        }
        let w_image = Scalar::var(self.lambda)
            .div(&Scalar::var(Var::new("u_xy")))
            .expect("u_xy is not zero");
        let substituted = self.substituted_combination(branch, &w_image)?;
        let omega = cov.we_form(0, 0)?.transport(&self.gs)?;
        let q00_inv = Scalar::var(Var::new("q_0_0")).inv().expect("nonzero");
        Ok(substituted.sub(&omega.scale(&q00_inv)))
    }
}

/// Verifies one branch of the reduction theorem: substituting the covering
/// coordinates into the reduced Maurer–Cartan combination yields exactly
/// `q_0_0^{-1} omega_0_0`.
pub fn verify_theorem(branch: TheoremBranch, cov: &CoveringContext) -> Result<Report, JetError> {
    let forms = build_reduced_forms()?;
    let (res, ms) = timed(|| forms.theorem_residual(branch, cov));
    let id = format!("theorem/branch-{}", branch.number());
    let mut rep = match res {
        Ok(f) if f.is_zero() => Report::pass(id),
        Ok(f) => Report::fail(id, f.to_string()),
        Err(e) => Report::fail(id, e.to_string()),
    };
    rep.elapsed_ms = ms;
    rep.config = format!(
        "jet-order={} cov-order={}",
        cov.ctx().k_max(),
        cov.ctx().q_max()
    );
    Ok(rep)
}

/// Structure checks for the reduced forms: `d eta5 = 0`, the `xi^1`/`xi^4`
/// structure equations with recovery of `eta2`/`eta3` modulo the span of
/// `xi^1, xi^4`, and module membership for `d xi^2`, `d xi^3`.
pub fn solve_reduced_structure() -> Result<Vec<Report>, JetError> {
    let forms = build_reduced_forms()?;
    let gs = &forms.gs;
    let mut out = Vec::new();

    // d eta5 = 0 in coordinates
    let (res, ms) = timed(|| forms.eta5.exterior_derivative());
    let id = "reduced-structure/eta5-closed";
    let mut rep = match res {
        Ok(f) if f.is_zero() => Report::pass(id),
        Ok(f) => Report::fail(id, f.to_string()),
        Err(e) => Report::fail(id, e.to_string()),
    };
    rep.elapsed_ms = ms;
    out.push(rep);

    let delta = Scalar::var(Var::new("b11"))
        .mul(&Scalar::var(Var::new("b44")))
        .sub(&Scalar::var(Var::new("b14")).mul(&Scalar::var(Var::new("b41"))));
    let span = [forms.xi[0].clone(), forms.xi[3].clone()];

    // d xi^1 = eta1 ^ xi^1 + eta2 ^ xi^4 and the closed form of eta2
    let expected_eta2 = parse_form(gs, "(b11 d(b14) - b14 d(b11))")
        .expect("closed form")
        .scale(&delta.inv().expect("generic chart"));
    let r1 = forms.xi[0]
        .exterior_derivative()?
        .sub(&forms.eta1.wedge(&forms.xi[0])?);
    push_structure_reports(
        &mut out,
        "xi1",
        "eta2",
        &r1,
        &forms.xi[3],
        &forms.xi[0],
        &expected_eta2,
        &span,
    )?;

    // d xi^4 = eta3 ^ xi^1 + eta4 ^ xi^4 and the closed form of eta3
    let expected_eta3 = parse_form(gs, "(b44 d(b41) - b41 d(b44))")
        .expect("closed form")
        .scale(&delta.inv().expect("generic chart"));
    let r4 = forms.xi[3]
        .exterior_derivative()?
        .sub(&forms.eta4.wedge(&forms.xi[3])?);
    push_structure_reports(
        &mut out,
        "xi4",
        "eta3",
        &r4,
        &forms.xi[0],
        &forms.xi[3],
        &expected_eta3,
        &span,
    )?;

    // d xi^2 and d xi^3 lie in the module generated by xi^1..xi^4
    for (index, name) in [(1usize, "xi2"), (2usize, "xi3")] {
        let (res, ms) = timed(|| -> Result<SolveOutcome, JetError> {
            let d = forms.xi[index].exterior_derivative()?;
            Ok(solve_structure(&d, &forms.xi)?)
        });
        out.push(outcome_report(
            format!("reduced-structure/{name}-membership"),
            res,
            ms,
            "",
        ));
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn push_structure_reports(
    out: &mut Vec<Report>,
    xi_name: &str,
    eta_name: &str,
    residual: &Form,
    known: &Form,
    wedge_against: &Form,
    expected: &Form,
    span: &[Form; 2],
) -> Result<(), JetError> {
    // (d xi - eta ^ xi) ^ other-xi = 0
    let (wedged, ms) = timed(|| residual.wedge(wedge_against));
    let id = format!("reduced-structure/{xi_name}-structure");
    let mut rep = match wedged {
        Ok(f) if f.is_zero() => Report::pass(id),
        Ok(f) => Report::fail(id, f.to_string()),
        Err(e) => Report::fail(id, e.to_string()),
    };
    rep.elapsed_ms = ms;
    out.push(rep);

    // recover the unknown 1-form and compare modulo span{xi^1, xi^4}
    let (res, ms) = timed(|| -> Result<Option<Vec<Scalar>>, JetError> {
        match solve_structure(residual, std::slice::from_ref(known))? {
            SolveOutcome::Solved(alphas) => {
                let diff = alphas[0].sub(expected);
                Ok(express_in_span(&diff, span)?)
            }
            SolveOutcome::Unsolvable { .. } => Ok(None),
        }
    });
    let id = format!("reduced-structure/{eta_name}-recovered");
    let mut rep = match res {
        Ok(Some(_)) => Report::pass(id),
        Ok(None) => Report::fail(id, "recovered form differs off the span"),
        Err(e) => Report::fail(id, e.to_string()),
    };
    rep.elapsed_ms = ms;
    out.push(rep);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::parse_form;
    use crate::symexpr::parse_scalar;

    fn s(text: &str) -> Scalar {
        parse_scalar(text).unwrap()
    }

    #[test]
    fn inverse_matrix_identities() {
        for n in 1..=3 {
            let lc = LiftedCoframe::new(n).unwrap();
            for i in 1..=n {
                for l in 1..=n {
                    let mut acc = Scalar::zero();
                    for k in 1..=n {
                        acc = acc.add(
                            &lc.b_inverse(i, k).mul(&Scalar::var(lc.b_var(k, l))),
                        );
                    }
                    let expected = if i == l { Scalar::one() } else { Scalar::zero() };
                    assert_eq!(acc, expected, "B b != id at n={n} ({i},{l})");
                }
            }
        }
    }

    #[test]
    fn identity_chart_restores_contact_form() {
        let lc = LiftedCoframe::new(1).unwrap();
        let gs = &lc.chart.gs;
        let mut sm = HashMap::new();
        let mut gm = HashMap::new();
        for (name, value) in [("a", 1i64), ("b11", 1), ("c1", 0), ("f11", 0), ("g1", 0)] {
            let v = Var::new(name);
            sm.insert(v, Scalar::int(value));
            gm.insert(gs.coordinate_index(v).unwrap(), Form::zero(gs));
        }
        let got = lc.theta0.substitute(&sm, &gm).unwrap();
        assert_eq!(got, lc.chart.thetas[0]);
        let th1 = lc.thetas[0].substitute(&sm, &gm).unwrap();
        assert_eq!(th1, lc.chart.thetas[1]);
    }

    #[test]
    fn coframe_is_a_coframe_at_n2() {
        let lc = LiftedCoframe::with_degree_cap(2, 8).unwrap();
        // scaling by nonzero scalars cannot change (non)degeneracy, and
        // polynomial coefficients keep the 8-fold wedge cheap
        let mut top = lc.theta0.cleared_denominators();
        for f in &lc.thetas {
            top = top.wedge(&f.cleared_denominators()).unwrap();
        }
        for f in &lc.xis {
            top = top.wedge(&f.cleared_denominators()).unwrap();
        }
        for f in [lc.sigma(1, 1), lc.sigma(1, 2), lc.sigma(2, 2)] {
            top = top.wedge(&f.cleared_denominators()).unwrap();
        }
        assert!(!top.is_zero(), "lifted forms fail to span the cotangent space");
    }

    #[test]
    fn sigma_count_n3() {
        let lc = LiftedCoframe::new(3).unwrap();
        assert_eq!(lc.sigma_count(), 6);
    }

    #[test]
    fn theta0_structure_identity_n1_n2() {
        for n in [1, 2] {
            let lc = LiftedCoframe::new(n).unwrap();
            let r = lc.theta0_structure_residual().unwrap();
            assert!(r.is_zero(), "n={n}: residual {r}");
        }
    }

    #[test]
    fn desymmetrized_f_breaks_theta0_identity() {
        let lc = LiftedCoframe::desymmetrized(2).unwrap();
        let r = lc.theta0_structure_residual().unwrap();
        assert!(!r.is_zero(), "asymmetric f must leave a remainder");
    }

    #[test]
    fn cont_structure_passes_n1() {
        let reports = check_cont_structure(1).unwrap();
        assert!(!reports.is_empty());
        for rep in &reports {
            assert!(rep.is_pass(), "{rep}");
        }
    }

    #[test]
    fn cont_structure_passes_n2() {
        let reports = check_cont_structure(2).unwrap();
        assert_eq!(reports.len(), 1 + 2 + 2 + 3);
        for rep in &reports {
            assert!(rep.is_pass(), "{rep}");
        }
    }

    #[test]
    fn theta_solve_reconstructs() {
        let lc = LiftedCoframe::new(2).unwrap();
        let mut r = lc.thetas[0].exterior_derivative().unwrap();
        for k in 1..=2 {
            r = r.sub(&lc.xis[k - 1].wedge(lc.sigma(1, k)).unwrap());
        }
        let mut knowns = vec![lc.theta0.clone()];
        knowns.extend(lc.thetas.iter().cloned());
        match solve_structure(&r, &knowns).unwrap() {
            SolveOutcome::Solved(alphas) => {
                let mut rebuilt = Form::zero(&lc.chart.gs);
                for (alpha, k) in alphas.iter().zip(&knowns) {
                    rebuilt = rebuilt.add(&alpha.wedge(k).unwrap());
                }
                assert_eq!(rebuilt, r);
            }
            other => panic!("expected solvable, got {other:?}"),
        }
    }

    #[test]
    fn log_determinant_identity() {
        let forms = build_reduced_forms().unwrap();
        // eta1 + eta4 = d(Delta)/Delta: the r-terms cancel
        let sum = forms.eta1.add(&forms.eta4);
        let delta = s("b11*b44 - b14*b41");
        let d_delta = crate::forms::differential_of_scalar(&forms.gs, &delta).unwrap();
        assert_eq!(sum, d_delta.scale(&delta.inv().unwrap()));
        // and it is closed
        assert!(sum.exterior_derivative().unwrap().is_zero());
    }

    #[test]
    fn log_volume_identity() {
        let forms = build_reduced_forms().unwrap();
        let expected = parse_form(&forms.gs, "(1/v) d(v)").unwrap();
        assert_eq!(forms.log_volume_form(), expected);
    }

    #[test]
    fn eta5_is_closed() {
        let forms = build_reduced_forms().unwrap();
        assert!(forms.eta5.exterior_derivative().unwrap().is_zero());
    }

    #[test]
    fn theorem_branch_one() {
        let cov = CoveringContext::new(4, 2);
        let forms = build_reduced_forms().unwrap();
        let r = forms.theorem_residual(TheoremBranch::One, &cov).unwrap();
        assert!(r.is_zero(), "branch 1 residual: {r}");
    }

    #[test]
    fn theorem_branch_two() {
        let cov = CoveringContext::new(4, 2);
        let forms = build_reduced_forms().unwrap();
        let r = forms.theorem_residual(TheoremBranch::Two, &cov).unwrap();
        assert!(r.is_zero(), "branch 2 residual: {r}");
    }

    #[test]
    fn theorem_wrong_substitution_fails() {
        // w -> lambda instead of lambda / u_xy: the (w-1) u_xy term no
        // longer collapses and the residual survives, carrying u_xy
        let cov = CoveringContext::new(4, 2);
        let forms = build_reduced_forms().unwrap();
        let bad_w = Scalar::var(forms.lambda);
        let substituted = forms
            .substituted_combination(TheoremBranch::One, &bad_w)
            .unwrap();
        let omega = cov.we_form(0, 0).unwrap().transport(&forms.gs).unwrap();
        let q00_inv = Scalar::var(Var::new("q_0_0")).inv().unwrap();
        let r = substituted.sub(&omega.scale(&q00_inv));
        assert!(!r.is_zero());
        assert!(r.to_string().contains("u_xy"), "residual: {r}");
    }

    #[test]
    fn reduced_structure_reports_pass() {
        let reports = solve_reduced_structure().unwrap();
        assert_eq!(reports.len(), 7);
        for rep in &reports {
            assert!(rep.is_pass(), "{rep}");
        }
    }

    #[test]
    fn eta2_eta3_closed_forms() {
        let forms = build_reduced_forms().unwrap();
        let gs = &forms.gs;
        let delta = s("b11*b44 - b14*b41");
        // eta2 representative from the solver agrees with the closed form
        let r = forms.xi[0]
            .exterior_derivative()
            .unwrap()
            .sub(&forms.eta1.wedge(&forms.xi[0]).unwrap());
        let alphas = match solve_structure(&r, std::slice::from_ref(&forms.xi[3])).unwrap() {
            SolveOutcome::Solved(a) => a,
            other => panic!("unsolvable: {other:?}"),
        };
        let expected = parse_form(gs, "b11 d(b14) - b14 d(b11)")
            .unwrap()
            .scale(&delta.inv().unwrap());
        let diff = alphas[0].sub(&expected);
        let span = [forms.xi[0].clone(), forms.xi[3].clone()];
        let coeffs = express_in_span(&diff, &span).unwrap();
        assert!(coeffs.is_some(), "eta2 differs off span: {diff}");
        // reconstruction: d xi^1 = eta1 ^ xi^1 + eta2 ^ xi^4 exactly
        let rebuilt = forms
            .eta1
            .wedge(&forms.xi[0])
            .unwrap()
            .add(&alphas[0].wedge(&forms.xi[3]).unwrap());
        assert_eq!(rebuilt, forms.xi[0].exterior_derivative().unwrap());
    }

    #[test]
    fn xi_membership_reconstructs() {
        let forms = build_reduced_forms().unwrap();
        let d2 = forms.xi[1].exterior_derivative().unwrap();
        match solve_structure(&d2, &forms.xi).unwrap() {
            SolveOutcome::Solved(alphas) => {
                let mut rebuilt = Form::zero(&forms.gs);
                for (alpha, xi) in alphas.iter().zip(&forms.xi) {
                    rebuilt = rebuilt.add(&alpha.wedge(xi).unwrap());
                }
                assert_eq!(rebuilt, d2);
            }
            other => panic!("d xi^2 not in the xi module: {other:?}"),
        }
    }
}
