//! The one-parameter covering of the second heavenly equation:
//!
//! ```text
//! q_t = (u_xy - lambda) q_x - u_xx q_y
//! q_z = u_yy q_x - (u_xy + lambda) q_y
//! ```
//!
//! realized through four prolonged total derivatives on the fibre
//! coordinates `q_i_j`, the compatibility (zero-curvature) check, and the
//! Wahlquist–Estabrook forms generating the dual ideal.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::forms::{differential_of_scalar, Form, FormError, GeneratorSet};
use crate::jets::{Direction, EquationManifold, JetContext, JetError, MultiIndex};
use crate::symexpr::{Scalar, Var};

/// Jet context extended by the covering: the spectral parameter and the
/// prolongation coefficients of the `t` and `z` flows.
pub struct CoveringContext {
    ctx: JetContext,
    eq: EquationManifold,
    lambda: Var,
    gs: Arc<GeneratorSet>,
    // memoized D~_x^i D~_y^j images of the two seeds, keyed by (i, j, reduced)
    t_cache: Mutex<HashMap<(u32, u32, bool), Scalar>>,
    z_cache: Mutex<HashMap<(u32, u32, bool), Scalar>>,
}

impl CoveringContext {
    pub fn new(k_max: u32, q_max: u32) -> CoveringContext {
        CoveringContext::with_spectral_parameter(k_max, q_max, "lambda")
    }

    /// The spectral parameter is an arbitrary formal constant; its name must
    /// not collide with a chart coordinate.
    pub fn with_spectral_parameter(k_max: u32, q_max: u32, lambda: &str) -> CoveringContext {
        let ctx = JetContext::new(k_max, q_max).with_parameter(lambda);
        let eq = EquationManifold::heavenly(&ctx);
        let gs = ctx.generator_set(4);
        CoveringContext {
            ctx,
            eq,
            lambda: Var::new(lambda),
            gs,
            t_cache: Mutex::new(HashMap::new()),
            z_cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn ctx(&self) -> &JetContext {
        &self.ctx
    }

    pub fn equation(&self) -> &EquationManifold {
        &self.eq
    }

    pub fn lambda(&self) -> Var {
        self.lambda
    }

    pub fn generator_set(&self) -> &Arc<GeneratorSet> {
        &self.gs
    }

    fn jet2(&self, t: u8, x: u8, y: u8, z: u8) -> Scalar {
        self.ctx
            .jet_scalar(MultiIndex::new(t, x, y, z))
            .expect("second-order jet")
    }

    /// `(u_xy - lambda) q_1_0 - u_xx q_0_1`, the coefficient of the `t` flow.
    pub fn t_seed(&self) -> Result<Scalar, JetError> {
        let l = Scalar::var(self.lambda);
        Ok(self
            .jet2(0, 1, 1, 0)
            .sub(&l)
            .mul(&self.ctx.q_scalar(1, 0)?)
            .sub(&self.jet2(0, 2, 0, 0).mul(&self.ctx.q_scalar(0, 1)?)))
    }

    /// `u_yy q_1_0 - (u_xy + lambda) q_0_1`, the coefficient of the `z` flow.
    pub fn z_seed(&self) -> Result<Scalar, JetError> {
        let l = Scalar::var(self.lambda);
        Ok(self
            .jet2(0, 0, 2, 0)
            .mul(&self.ctx.q_scalar(1, 0)?)
            .sub(&self.jet2(0, 1, 1, 0).add(&l).mul(&self.ctx.q_scalar(0, 1)?)))
    }

    /// `D~_x^i D~_y^j` of the `t` seed: the `∂/∂q_i_j` coefficient of `D~_t`.
    pub fn t_coefficient(&self, i: u32, j: u32, reduced: bool) -> Result<Scalar, JetError> {
        self.flow_coefficient(i, j, reduced, true)
    }

    /// `D~_x^i D~_y^j` of the `z` seed: the `∂/∂q_i_j` coefficient of `D~_z`.
    pub fn z_coefficient(&self, i: u32, j: u32, reduced: bool) -> Result<Scalar, JetError> {
        self.flow_coefficient(i, j, reduced, false)
    }

    fn flow_coefficient(
        &self,
        i: u32,
        j: u32,
        reduced: bool,
        t_flow: bool,
    ) -> Result<Scalar, JetError> {
        let cache = if t_flow { &self.t_cache } else { &self.z_cache };
        if let Some(hit) = cache.lock().expect("cache").get(&(i, j, reduced)) {
            return Ok(hit.clone());
        }
        let out = if i == 0 && j == 0 {
            let seed = if t_flow { self.t_seed()? } else { self.z_seed()? };
            if reduced {
                self.eq.reduce(&seed, &self.ctx)?
            } else {
                seed
            }
        } else if j > 0 {
            let prev = self.flow_coefficient(i, j - 1, reduced, t_flow)?;
            self.prolonged_derivative_impl(&prev, Direction::Y, reduced)?
        } else {
            let prev = self.flow_coefficient(i - 1, j, reduced, t_flow)?;
            self.prolonged_derivative_impl(&prev, Direction::X, reduced)?
        };
        cache
            .lock()
            .expect("cache")
            .insert((i, j, reduced), out.clone());
        Ok(out)
    }

    /// The prolonged total derivative `D~_dir` applied to a scalar, with the
    /// base part restricted to the equation when `reduced` is set.
    pub fn prolonged_derivative(&self, s: &Scalar, dir: Direction) -> Result<Scalar, JetError> {
        self.prolonged_derivative_impl(s, dir, true)
    }

    /// Same, but without any equation reduction (the free prolongation).
    pub fn prolonged_derivative_unreduced(
        &self,
        s: &Scalar,
        dir: Direction,
    ) -> Result<Scalar, JetError> {
        self.prolonged_derivative_impl(s, dir, false)
    }

    fn prolonged_derivative_impl(
        &self,
        s: &Scalar,
        dir: Direction,
        reduced: bool,
    ) -> Result<Scalar, JetError> {
        // base: total derivative with covering coordinates held constant
        let mut out = self.ctx.total_derivative(s, dir)?;
        for v in s.support() {
            if let Some((i, j)) = self.ctx.q_index_of(v) {
                let ds = s.partial(v);
                if ds.is_zero() {
                    continue;
                }
                let flow = match dir {
                    Direction::X => self.ctx.q_scalar(i + 1, j)?,
                    Direction::Y => self.ctx.q_scalar(i, j + 1)?,
                    Direction::T => self.t_coefficient(i, j, reduced)?,
                    Direction::Z => self.z_coefficient(i, j, reduced)?,
                };
                out = out.add(&ds.mul(&flow));
            }
        }
        if reduced {
            out = self.eq.reduce(&out, &self.ctx)?;
        }
        Ok(out)
    }

    /// Commutator `[D~_a, D~_b] s`, reduced modulo the equation.
    pub fn commutator(
        &self,
        a: Direction,
        b: Direction,
        s: &Scalar,
    ) -> Result<Scalar, JetError> {
        let ab = self.prolonged_derivative(&self.prolonged_derivative(s, b)?, a)?;
        let ba = self.prolonged_derivative(&self.prolonged_derivative(s, a)?, b)?;
        Ok(ab.sub(&ba))
    }

    /// `[D~_t, D~_z] q_0_0`: zero after reduction; without reduction it is
    /// `(D_x E) q_0_1 - (D_y E) q_1_0` for the defect `E` of the equation.
    pub fn compatibility_residual(&self, reduce: bool) -> Result<Scalar, JetError> {
        let q00 = self.ctx.q_scalar(0, 0)?;
        if reduce {
            return self.commutator(Direction::T, Direction::Z, &q00);
        }
        let tz = self.prolonged_derivative_unreduced(
            &self.prolonged_derivative_unreduced(&q00, Direction::Z)?,
            Direction::T,
        )?;
        let zt = self.prolonged_derivative_unreduced(
            &self.prolonged_derivative_unreduced(&q00, Direction::T)?,
            Direction::Z,
        )?;
        Ok(tz.sub(&zt))
    }

    /// The Wahlquist–Estabrook form
    /// `omega_i_j = dq_i_j - (D~_t q_i_j) dt - q_{i+1}_j dx - q_i_{j+1} dy - (D~_z q_i_j) dz`
    /// with coefficients reduced modulo the equation.
    pub fn we_form(&self, i: u32, j: u32) -> Result<Form, JetError> {
        let gs = &self.gs;
        let d = |v: Var| Form::differential(gs, v).map_err(JetError::from);
        let mut omega = d(self.ctx.q(i, j)?)?;
        omega = omega.sub(&d(self.ctx.indep(Direction::T))?.scale(&self.t_coefficient(i, j, true)?));
        omega = omega.sub(&d(self.ctx.indep(Direction::X))?.scale(&self.ctx.q_scalar(i + 1, j)?));
        omega = omega.sub(&d(self.ctx.indep(Direction::Y))?.scale(&self.ctx.q_scalar(i, j + 1)?));
        omega = omega.sub(&d(self.ctx.indep(Direction::Z))?.scale(&self.z_coefficient(i, j, true)?));
        Ok(omega)
    }

    /// The contact-respecting lift of `D~_x` or `D~_y` to forms: coefficients
    /// move by the prolonged derivative, `dq_a_b` by the index shift, and
    /// each jet differential `du_s` by `d` of the restricted derivative of
    /// `u_s`; base differentials are annihilated.
    pub fn we_lift(&self, omega: &Form, dir: Direction) -> Result<Form, JetError> {
        assert!(
            matches!(dir, Direction::X | Direction::Y),
            "lift defined for the x and y flows"
        );
        let gs = &self.gs;
        let out = omega.even_derivation(
            |c| {
                self.prolonged_derivative(c, dir)
                    .map_err(|e| FormError::MissingDifferential { var: e.to_string() })
            },
            |g| {
                let info = gs.info(g);
                let v = match info.kind {
                    crate::forms::GenKind::Coordinate(v) => v,
                    _ => {
                        return Err(FormError::AbstractGeneratorInDerivative {
                            name: info.name.clone(),
                        })
                    }
                };
                if let Some((i, j)) = self.ctx.q_index_of(v) {
                    let shifted = match dir {
                        Direction::X => self.ctx.q(i + 1, j),
                        _ => self.ctx.q(i, j + 1),
                    }
                    .map_err(|e| FormError::MissingDifferential { var: e.to_string() })?;
                    return Form::differential(gs, shifted);
                }
                if let Some(mi) = self.ctx.jet_index_of(v) {
                    let shifted = self
                        .eq
                        .normal_form(mi.bump(dir), &self.ctx)
                        .map_err(|e| FormError::MissingDifferential { var: e.to_string() })?;
                    return differential_of_scalar(gs, &shifted);
                }
                // base coordinates: d(D~ x^k) = d(const) = 0
                Ok(Form::zero(gs))
            },
        )?;
        Ok(out)
    }

    /// Replaces `dq_a_b` by its horizontal expansion (the flat connection
    /// defined by `omega_a_b = 0`) and every jet differential `du_s` by
    /// `u_{s+dir} d(dir)` summed over directions.
    pub fn horizontalize(&self, f: &Form, reduced: bool) -> Result<Form, JetError> {
        let gs = &self.gs;
        let mut gen_map = HashMap::new();
        for (tuple, _) in f.terms() {
            for &g in tuple {
                if gen_map.contains_key(&g) {
                    continue;
                }
                let v = match gs.info(g).kind {
                    crate::forms::GenKind::Coordinate(v) => v,
                    _ => continue,
                };
                if let Some((i, j)) = self.ctx.q_index_of(v) {
                    let mut img = Form::zero(gs);
                    for dir in Direction::ALL {
                        let coeff = match dir {
                            Direction::X => self.ctx.q_scalar(i + 1, j)?,
                            Direction::Y => self.ctx.q_scalar(i, j + 1)?,
                            Direction::T => self.t_coefficient(i, j, reduced)?,
                            Direction::Z => self.z_coefficient(i, j, reduced)?,
                        };
                        img = img.add(&Form::differential(gs, self.ctx.indep(dir))?.scale(&coeff));
                    }
                    gen_map.insert(g, img);
                } else if let Some(mi) = self.ctx.jet_index_of(v) {
                    let mut img = Form::zero(gs);
                    for dir in Direction::ALL {
                        let bumped = self.ctx.jet_scalar(mi.bump(dir))?;
                        img = img.add(&Form::differential(gs, self.ctx.indep(dir))?.scale(&bumped));
                    }
                    gen_map.insert(g, img);
                }
            }
        }
        let mut out = f.substitute(&HashMap::new(), &gen_map)?;
        if reduced {
            out = out.map_coefficients(|c| {
                self.eq
                    .reduce(c, &self.ctx)
                    .map_err(|e| FormError::MissingDifferential { var: e.to_string() })
            })?;
        }
        Ok(out)
    }

    /// Horizontal flatness of the generating form: `d omega_0_0` with all
    /// fibre and jet differentials expanded horizontally. Identically zero
    /// modulo the equation.
    pub fn we_flatness(&self, reduced: bool) -> Result<Form, JetError> {
        let omega = self.we_form(0, 0)?;
        let d_omega = omega.exterior_derivative()?;
        self.horizontalize(&d_omega, reduced)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::parse_form;
    use crate::symexpr::parse_scalar;

    fn s(text: &str) -> Scalar {
        parse_scalar(text).unwrap()
    }

    fn cov() -> CoveringContext {
        CoveringContext::new(6, 4)
    }

    /// Chain-rule oracle independent of `JetContext::total_derivative`:
    /// bumps jet names literally and differentiates with `Scalar::partial`.
    fn oracle_total_derivative(e: &Scalar, dir: char) -> Scalar {
        let mut out = e.partial(Var::new(&dir.to_string()));
        for v in e.support() {
            let name = v.name();
            let is_jet = name == "u" || name.starts_with("u_");
            if !is_jet {
                continue;
            }
            let mut letters: Vec<char> = name.strip_prefix("u_").unwrap_or("").chars().collect();
            letters.push(dir);
            letters.sort_by_key(|c| "txyz".find(*c).unwrap());
            let bumped = format!("u_{}", letters.iter().collect::<String>());
            out = out.add(&e.partial(v).mul(&Scalar::var(Var::new(&bumped))));
        }
        out
    }

    #[test]
    fn prolonged_x_shifts_fibre_index() {
        let c = cov();
        let got = c.prolonged_derivative(&s("q_0_0"), Direction::X).unwrap();
        assert_eq!(got, s("q_1_0"));
    }

    #[test]
    fn prolonged_t_is_first_covering_equation() {
        let c = cov();
        let got = c.prolonged_derivative(&s("q_0_0"), Direction::T).unwrap();
        assert_eq!(got, s("(u_xy - lambda)*q_1_0 - u_xx*q_0_1"));
    }

    #[test]
    fn prolonged_z_is_second_covering_equation() {
        let c = cov();
        let got = c.prolonged_derivative(&s("q_0_0"), Direction::Z).unwrap();
        assert_eq!(got, s("u_yy*q_1_0 - (u_xy + lambda)*q_0_1"));
    }

    #[test]
    fn compatibility_reduces_to_zero() {
        let c = cov();
        let r = c.compatibility_residual(true).unwrap();
        assert!(r.is_zero(), "[Dt, Dz] q00 = {r}");
    }

    #[test]
    fn compatibility_unreduced_has_defect_cofactors() {
        let c = cov();
        let r = c.compatibility_residual(false).unwrap();
        let e = c.equation().defect(c.ctx());
        let dx_e = oracle_total_derivative(&e, 'x');
        let dy_e = oracle_total_derivative(&e, 'y');
        let expected = dx_e.mul(&s("q_0_1")).sub(&dy_e.mul(&s("q_1_0")));
        assert_eq!(r, expected);
        // and the cofactors are themselves reducible to zero
        assert!(c.equation().reduce(&r, c.ctx()).unwrap().is_zero());
    }

    #[test]
    fn x_and_y_prolongations_commute_on_fibre() {
        let c = cov();
        // two derivative steps: computable for i + j <= Q - 2
        for level in 0..=2u32 {
            for i in 0..=level {
                let q = c.ctx().q_scalar(i, level - i).unwrap();
                let r = c.commutator(Direction::X, Direction::Y, &q).unwrap();
                assert!(r.is_zero());
            }
        }
    }

    #[test]
    fn all_commutators_vanish_on_q00() {
        let c = cov();
        let q00 = s("q_0_0");
        let dirs = Direction::ALL;
        for (ai, &a) in dirs.iter().enumerate() {
            for &b in &dirs[ai + 1..] {
                let r = c.commutator(a, b, &q00).unwrap();
                assert!(r.is_zero(), "[{a},{b}] q00 = {r}");
            }
        }
    }

    #[test]
    fn generating_form_matches_covering() {
        let c = cov();
        let omega = c.we_form(0, 0).unwrap();
        let expected = parse_form(
            c.generator_set(),
            "d(q_0_0) - ((u_xy - lambda)*q_1_0 - u_xx*q_0_1) d(t) - q_1_0 d(x) - q_0_1 d(y) \
             - (u_yy*q_1_0 - (u_xy + lambda)*q_0_1) d(z)",
        )
        .unwrap();
        assert_eq!(omega, expected);
    }

    #[test]
    fn closed_formula_agrees_with_lift() {
        let c = cov();
        let omega00 = c.we_form(0, 0).unwrap();
        assert_eq!(
            c.we_form(1, 0).unwrap(),
            c.we_lift(&omega00, Direction::X).unwrap()
        );
        assert_eq!(
            c.we_form(0, 1).unwrap(),
            c.we_lift(&omega00, Direction::Y).unwrap()
        );
        // one level deeper, mixed path
        let omega11_via_x = c
            .we_lift(&c.we_form(0, 1).unwrap(), Direction::X)
            .unwrap();
        assert_eq!(c.we_form(1, 1).unwrap(), omega11_via_x);
    }

    #[test]
    fn flat_background_collapses_generating_form() {
        let c = cov();
        let omega = c.we_form(0, 0).unwrap();
        let gs = c.generator_set();
        let mut sm = HashMap::new();
        let mut gm = HashMap::new();
        sm.insert(Var::new("lambda"), Scalar::zero());
        for name in ["u_xx", "u_xy", "u_yy"] {
            let v = Var::new(name);
            sm.insert(v, Scalar::zero());
            gm.insert(gs.coordinate_index(v).unwrap(), Form::zero(gs));
        }
        let flat = omega.substitute(&sm, &gm).unwrap();
        let expected = parse_form(gs, "d(q_0_0) - q_1_0 d(x) - q_0_1 d(y)").unwrap();
        assert_eq!(flat, expected);
    }

    #[test]
    fn horizontalized_flatness_vanishes() {
        let c = cov();
        let r = c.we_flatness(true).unwrap();
        assert!(r.is_zero(), "flatness residual {r}");
    }

    #[test]
    fn unreduced_flatness_is_the_compatibility_defect() {
        let c = cov();
        let r = c.we_flatness(false).unwrap();
        assert!(!r.is_zero());
        // every coefficient dies modulo the equation
        let reduced = r
            .map_coefficients(|co| {
                Ok(c.equation()
                    .reduce(co, c.ctx())
                    .expect("reduction"))
            })
            .unwrap();
        assert!(reduced.is_zero(), "reduced residual {reduced}");
        // the dt^dz coefficient carries exactly the unreduced commutator
        let gs = c.generator_set();
        let dt = gs.coordinate_index(Var::new("t")).unwrap();
        let dz = gs.coordinate_index(Var::new("z")).unwrap();
        let coeff = r.coefficient(&[dt.min(dz), dt.max(dz)]);
        let compat = c.compatibility_residual(false).unwrap();
        assert!(
            coeff == compat || coeff == compat.neg(),
            "dt^dz coefficient {coeff} vs commutator {compat}"
        );
    }

    #[test]
    fn spectral_parameter_is_arbitrary() {
        let c = CoveringContext::with_spectral_parameter(6, 4, "mu");
        assert!(c.compatibility_residual(true).unwrap().is_zero());
        assert!(c.we_flatness(true).unwrap().is_zero());
        let omega = c.we_form(0, 0).unwrap();
        assert!(omega.to_string().contains("mu"));
    }
}
