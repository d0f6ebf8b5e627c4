//! Jet-space bookkeeping for one dependent variable `u` over `(t, x, y, z)`:
//! total derivatives, and reduction modulo the infinite prolongation of the
//! second heavenly equation
//!
//! ```text
//! u_xz = u_ty + u_xx*u_yy - u_xy^2
//! ```
//!
//! solved for `u_xz`. Internal coordinates are the jets with no mixed `x,z`
//! derivative; every other jet has a unique normal form in them.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex};

use crate::forms::{Form, FormError, GeneratorSet, GeneratorSetBuilder};
use crate::symexpr::{ArithError, Scalar, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    T,
    X,
    Y,
    Z,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::T, Direction::X, Direction::Y, Direction::Z];

    pub fn letter(self) -> char {
        match self {
            Direction::T => 't',
            Direction::X => 'x',
            Direction::Y => 'y',
            Direction::Z => 'z',
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// Symmetric multi-index of a jet of `u`: derivative counts per direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct MultiIndex {
    pub t: u8,
    pub x: u8,
    pub y: u8,
    pub z: u8,
}

impl MultiIndex {
    pub fn new(t: u8, x: u8, y: u8, z: u8) -> MultiIndex {
        MultiIndex { t, x, y, z }
    }

    pub fn order(&self) -> u32 {
        self.t as u32 + self.x as u32 + self.y as u32 + self.z as u32
    }

    pub fn bump(&self, dir: Direction) -> MultiIndex {
        let mut out = *self;
        match dir {
            Direction::T => out.t += 1,
            Direction::X => out.x += 1,
            Direction::Y => out.y += 1,
            Direction::Z => out.z += 1,
        }
        out
    }

    /// Variable name: `u` for the zero index, otherwise `u_` followed by the
    /// direction letters sorted t < x < y < z.
    pub fn var_name(&self) -> String {
        if self.order() == 0 {
            return "u".to_string();
        }
        let mut s = String::from("u_");
        for _ in 0..self.t {
            s.push('t');
        }
        for _ in 0..self.x {
            s.push('x');
        }
        for _ in 0..self.y {
            s.push('y');
        }
        for _ in 0..self.z {
            s.push('z');
        }
        s
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.var_name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum JetError {
    #[error("jet truncation exceeded: `{var}` is past order {max}")]
    TruncationExceeded { var: String, max: u32 },
    #[error("covering truncation exceeded: `{var}` is past level {max}")]
    CoveringTruncationExceeded { var: String, max: u32 },
    #[error("{what} out of range")]
    OutOfRange { what: String },
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error(transparent)]
    Form(#[from] FormError),
}

/// Registry of the independent variables, the jets of `u` up to order `K`,
/// the covering fibre coordinates `q_i_j` with `i + j <= Q`, and formal
/// parameters. Built once, then read-only.
#[derive(Debug)]
pub struct JetContext {
    k_max: u32,
    q_max: u32,
    indep: [Var; 4],
    jets: BTreeMap<MultiIndex, Var>,
    jet_of: HashMap<Var, MultiIndex>,
    q_vars: BTreeMap<(u32, u32), Var>,
    q_of: HashMap<Var, (u32, u32)>,
    params: BTreeSet<Var>,
}

fn enumerate_indices(k_max: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let k = k_max as u8;
    for t in 0..=k {
        for x in 0..=k - t {
            for y in 0..=k - t - x {
                for z in 0..=k - t - x - y {
                    out.push(MultiIndex::new(t, x, y, z));
                }
            }
        }
    }
    out.sort_by_key(|mi| (mi.order(), mi.t, mi.x, mi.y, mi.z));
    out
}

impl JetContext {
    /// Jets up to order `k_max`, covering coordinates up to level `q_max`
    /// (pass 0 for none).
    pub fn new(k_max: u32, q_max: u32) -> JetContext {
        let indep = [Var::new("t"), Var::new("x"), Var::new("y"), Var::new("z")];
        let mut jets = BTreeMap::new();
        let mut jet_of = HashMap::new();
        for mi in enumerate_indices(k_max) {
            let v = Var::new(&mi.var_name());
            jets.insert(mi, v);
            jet_of.insert(v, mi);
        }
        let mut q_vars = BTreeMap::new();
        let mut q_of = HashMap::new();
        for level in 0..=q_max {
            for i in 0..=level {
                let j = level - i;
                let v = Var::new(&format!("q_{i}_{j}"));
                q_vars.insert((i, j), v);
                q_of.insert(v, (i, j));
            }
        }
        JetContext {
            k_max,
            q_max,
            indep,
            jets,
            jet_of,
            q_vars,
            q_of,
            params: BTreeSet::new(),
        }
    }

    pub fn with_parameter(mut self, name: &str) -> JetContext {
        self.params.insert(Var::new(name));
        self
    }

    pub fn k_max(&self) -> u32 {
        self.k_max
    }

    pub fn q_max(&self) -> u32 {
        self.q_max
    }

    pub fn indep(&self, dir: Direction) -> Var {
        match dir {
            Direction::T => self.indep[0],
            Direction::X => self.indep[1],
            Direction::Y => self.indep[2],
            Direction::Z => self.indep[3],
        }
    }

    pub fn jet(&self, mi: MultiIndex) -> Result<Var, JetError> {
        self.jets.get(&mi).copied().ok_or(JetError::TruncationExceeded {
            var: mi.var_name(),
            max: self.k_max,
        })
    }

    pub fn jet_scalar(&self, mi: MultiIndex) -> Result<Scalar, JetError> {
        Ok(Scalar::var(self.jet(mi)?))
    }

    pub fn jet_index_of(&self, v: Var) -> Option<MultiIndex> {
        self.jet_of.get(&v).copied()
    }

    pub fn jets(&self) -> impl Iterator<Item = (&MultiIndex, &Var)> {
        self.jets.iter()
    }

    pub fn q(&self, i: u32, j: u32) -> Result<Var, JetError> {
        self.q_vars
            .get(&(i, j))
            .copied()
            .ok_or(JetError::CoveringTruncationExceeded {
                var: format!("q_{i}_{j}"),
                max: self.q_max,
            })
    }

    pub fn q_scalar(&self, i: u32, j: u32) -> Result<Scalar, JetError> {
        Ok(Scalar::var(self.q(i, j)?))
    }

    pub fn q_index_of(&self, v: Var) -> Option<(u32, u32)> {
        self.q_of.get(&v).copied()
    }

    pub fn q_vars(&self) -> impl Iterator<Item = (&(u32, u32), &Var)> {
        self.q_vars.iter()
    }

    pub fn is_param(&self, v: Var) -> bool {
        self.params.contains(&v)
    }

    /// Total derivative `D_dir s = ∂s/∂dir + Σ_σ u_{σ+dir} ∂s/∂u_σ`.
    ///
    /// Covering coordinates and parameters are treated as constants here.
    pub fn total_derivative(&self, s: &Scalar, dir: Direction) -> Result<Scalar, JetError> {
        let mut out = s.partial(self.indep(dir));
        for v in s.support() {
            if let Some(mi) = self.jet_index_of(v) {
                let ds = s.partial(v);
                if ds.is_zero() {
                    continue;
                }
                let bumped = mi.bump(dir);
                if bumped.order() > self.k_max {
                    return Err(JetError::TruncationExceeded {
                        var: bumped.var_name(),
                        max: self.k_max,
                    });
                }
                out = out.add(&ds.mul(&self.jet_scalar(bumped)?));
            }
        }
        Ok(out)
    }

    /// Coordinate generator set of this chart: differentials of `t,x,y,z`,
    /// all registered jets, and all covering coordinates; parameters are
    /// formal constants.
    pub fn generator_set(&self, degree_cap: u32) -> Arc<GeneratorSet> {
        let mut b = GeneratorSetBuilder::new();
        for v in self.indep {
            b.coordinate(v);
        }
        for v in self.jets.values() {
            b.coordinate(*v);
        }
        for v in self.q_vars.values() {
            b.coordinate(*v);
        }
        for v in &self.params {
            b.constant(*v);
        }
        b.degree_cap(degree_cap);
        b.build().expect("chart generators are unique")
    }
}

/// The second heavenly equation presented as a rewrite rule
/// `u_xz -> u_ty + u_xx*u_yy - u_xy^2`, together with the normal forms of all
/// non-internal jets obtained by total differentiation of the rule.
pub struct EquationManifold {
    rhs: Scalar,
    nf_cache: Mutex<HashMap<MultiIndex, Scalar>>,
}

impl fmt::Debug for EquationManifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EquationManifold(u_xz = {})", self.rhs)
    }
}

impl EquationManifold {
    /// `u_xz = u_ty + u_xx*u_yy - u_xy^2`.
    pub fn heavenly(ctx: &JetContext) -> EquationManifold {
        let u_ty = ctx.jet_scalar(MultiIndex::new(1, 0, 1, 0)).expect("order 2");
        let u_xx = ctx.jet_scalar(MultiIndex::new(0, 2, 0, 0)).expect("order 2");
        let u_yy = ctx.jet_scalar(MultiIndex::new(0, 0, 2, 0)).expect("order 2");
        let u_xy = ctx.jet_scalar(MultiIndex::new(0, 1, 1, 0)).expect("order 2");
        let rhs = u_ty.add(&u_xx.mul(&u_yy)).sub(&u_xy.mul(&u_xy));
        EquationManifold {
            rhs,
            nf_cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn rhs(&self) -> &Scalar {
        &self.rhs
    }

    /// The defining polynomial `E = u_xz - u_ty - u_xx*u_yy + u_xy^2`.
    pub fn defect(&self, ctx: &JetContext) -> Scalar {
        ctx.jet_scalar(MultiIndex::new(0, 1, 0, 1))
            .expect("order 2")
            .sub(&self.rhs)
    }

    /// Jets with both an `x` and a `z` derivative are eliminated.
    pub fn is_internal(mi: MultiIndex) -> bool {
        !(mi.x >= 1 && mi.z >= 1)
    }

    /// Normal form of the jet `u_mi` in internal coordinates.
    pub fn normal_form(&self, mi: MultiIndex, ctx: &JetContext) -> Result<Scalar, JetError> {
        if Self::is_internal(mi) {
            return ctx.jet_scalar(mi);
        }
        if let Some(hit) = self.nf_cache.lock().expect("cache").get(&mi) {
            return Ok(hit.clone());
        }
        // u_mi = D^(mi - xz) applied to the right side, then reduced; the
        // unreduced derivative only contains jets of strictly smaller
        // z-count, so the recursion terminates
        let mut w = self.rhs.clone();
        for (dir, count) in [
            (Direction::T, mi.t),
            (Direction::X, mi.x - 1),
            (Direction::Y, mi.y),
            (Direction::Z, mi.z - 1),
        ] {
            for _ in 0..count {
                w = ctx.total_derivative(&w, dir)?;
            }
        }
        let nf = self.reduce(&w, ctx)?;
        self.nf_cache.lock().expect("cache").insert(mi, nf.clone());
        Ok(nf)
    }

    /// Rewrites every non-internal jet via the equation, recursively, until
    /// only internal coordinates remain. The result is unique.
    pub fn reduce(&self, s: &Scalar, ctx: &JetContext) -> Result<Scalar, JetError> {
        let mut cur = s.clone();
        loop {
            let mut map = HashMap::new();
            for v in cur.support() {
                if let Some(mi) = ctx.jet_index_of(v) {
                    if !Self::is_internal(mi) {
                        map.insert(v, self.normal_form(mi, ctx)?);
                    }
                }
            }
            if map.is_empty() {
                return Ok(cur);
            }
            cur = cur.substitute(&map)?;
        }
    }

    /// Restricted total derivative: reduce, differentiate, reduce.
    pub fn restricted_derivative(
        &self,
        s: &Scalar,
        dir: Direction,
        ctx: &JetContext,
    ) -> Result<Scalar, JetError> {
        let reduced = self.reduce(s, ctx)?;
        self.reduce(&ctx.total_derivative(&reduced, dir)?, ctx)
    }
}

/// The second-order contact chart for `n` independent variables: coordinates
/// `x1..xn, u, u1..un, u11..unn` (second jets symmetric, stored with `i <= j`)
/// plus any extra coordinates, and the contact forms on it.
pub struct ContactChart {
    pub n: usize,
    pub gs: Arc<GeneratorSet>,
    pub x: Vec<Var>,
    pub u: Var,
    pub u1: Vec<Var>,
    u2: Vec<Var>,
    /// Contact forms: index 0 is `du - u_i dx^i`, index i is
    /// `du_i - u_ij dx^j`.
    pub thetas: Vec<Form>,
}

impl ContactChart {
    pub fn new(n: usize, extra: &[Var], degree_cap: u32) -> Result<ContactChart, JetError> {
        if !(1..=4).contains(&n) {
            return Err(JetError::OutOfRange {
                what: format!("contact chart dimension n={n}"),
            });
        }
        let x: Vec<Var> = (1..=n).map(|i| Var::new(&format!("x{i}"))).collect();
        let u = Var::new("u");
        let u1: Vec<Var> = (1..=n).map(|i| Var::new(&format!("u{i}"))).collect();
        let mut u2 = Vec::new();
        for i in 1..=n {
            for j in i..=n {
                u2.push(Var::new(&format!("u{i}{j}")));
            }
        }
        let mut b = GeneratorSetBuilder::new();
        for v in x.iter().chain(Some(&u)).chain(&u1).chain(&u2) {
            b.coordinate(*v);
        }
        for v in extra {
            b.coordinate(*v);
        }
        b.degree_cap(degree_cap);
        let gs = b.build()?;

        let chart = ContactChart {
            n,
            gs,
            x,
            u,
            u1,
            u2,
            thetas: Vec::new(),
        };
        let mut thetas = Vec::with_capacity(n + 1);
        // theta_0 = du - u_i dx^i
        let mut th0 = Form::differential(&chart.gs, chart.u)?;
        for i in 1..=n {
            let dx = Form::differential(&chart.gs, chart.x[i - 1])?;
            th0 = th0.sub(&dx.scale(&Scalar::var(chart.u1[i - 1])));
        }
        thetas.push(th0);
        // theta_i = du_i - u_ij dx^j
        for i in 1..=n {
            let mut th = Form::differential(&chart.gs, chart.u1[i - 1])?;
            for j in 1..=n {
                let dx = Form::differential(&chart.gs, chart.x[j - 1])?;
                th = th.sub(&dx.scale(&Scalar::var(chart.u2(i, j))));
            }
            thetas.push(th);
        }
        Ok(ContactChart { thetas, ..chart })
    }

    /// The second-jet coordinate `u_ij = u_ji`, 1-based indices.
    pub fn u2(&self, i: usize, j: usize) -> Var {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        // offset of (i, j), i <= j, in row-major packed upper triangle
        let row_start: usize = (0..i - 1).map(|r| self.n - r).sum();
        self.u2[row_start + (j - i)]
    }

    pub fn second_jet_vars(&self) -> &[Var] {
        &self.u2
    }
}

/// The contact forms `[theta_0, theta_1, .., theta_n]` on the second-order
/// jet chart for `n` independent variables.
pub fn contact_forms(n: usize) -> Result<Vec<Form>, JetError> {
    Ok(ContactChart::new(n, &[], 4)?.thetas)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::parse_scalar;

    fn s(text: &str) -> Scalar {
        parse_scalar(text).unwrap()
    }

    fn ctx() -> JetContext {
        JetContext::new(6, 0).with_parameter("lambda")
    }

    #[test]
    fn total_derivative_definition() {
        let c = ctx();
        let u_y = s("u_y");
        assert_eq!(c.total_derivative(&u_y, Direction::X).unwrap(), s("u_xy"));
        assert!(c.total_derivative(&s("x"), Direction::T).unwrap().is_zero());
        assert_eq!(c.total_derivative(&s("x"), Direction::X).unwrap(), s("1"));
    }

    #[test]
    fn total_derivative_of_defect() {
        let c = ctx();
        let e = s("u_xz - u_ty - u_xx*u_yy + u_xy^2");
        let dy = c.total_derivative(&e, Direction::Y).unwrap();
        assert_eq!(
            dy,
            s("u_xyz - u_tyy - u_xxy*u_yy - u_xx*u_yyy + 2*u_xy*u_xyy")
        );
    }

    #[test]
    fn truncation_is_loud() {
        let c = JetContext::new(2, 0);
        let err = c.total_derivative(&s("u_xx"), Direction::X).unwrap_err();
        assert!(matches!(err, JetError::TruncationExceeded { .. }));
        assert!(err.to_string().contains("u_xxx"));
    }

    #[test]
    fn reduce_solved_jet() {
        let c = ctx();
        let eq = EquationManifold::heavenly(&c);
        assert_eq!(
            eq.reduce(&s("u_xz"), &c).unwrap(),
            s("u_ty + u_xx*u_yy - u_xy^2")
        );
        // already internal
        assert_eq!(eq.reduce(&s("u_yy"), &c).unwrap(), s("u_yy"));
    }

    #[test]
    fn reduce_one_prolongation_step() {
        let c = ctx();
        let eq = EquationManifold::heavenly(&c);
        assert_eq!(
            eq.reduce(&s("u_xxz"), &c).unwrap(),
            s("u_txy + u_xxx*u_yy + u_xx*u_xyy - 2*u_xy*u_xxy")
        );
    }

    #[test]
    fn reduce_is_idempotent_and_multiplicative() {
        let c = ctx();
        let eq = EquationManifold::heavenly(&c);
        let samples = [
            s("u_xz^2 - u_ty*u_xxz"),
            s("u_xyz + 3*u_xz*u_yy"),
            s("u_xxzz"),
        ];
        for (i, a) in samples.iter().enumerate() {
            let ra = eq.reduce(a, &c).unwrap();
            assert_eq!(eq.reduce(&ra, &c).unwrap(), ra, "idempotence {i}");
            for b in &samples {
                let rb = eq.reduce(b, &c).unwrap();
                let prod = eq.reduce(&a.mul(b), &c).unwrap();
                assert_eq!(prod, eq.reduce(&ra.mul(&rb), &c).unwrap(), "mult {i}");
            }
        }
    }

    #[test]
    fn restricted_derivatives_well_defined() {
        let c = ctx();
        let eq = EquationManifold::heavenly(&c);
        for sample in [s("u_xz*u_y"), s("u_xxz + u_x*u_z")] {
            for dir in Direction::ALL {
                let direct = eq.reduce(&c.total_derivative(&sample, dir).unwrap(), &c).unwrap();
                let staged = eq.restricted_derivative(&sample, dir, &c).unwrap();
                assert_eq!(direct, staged, "dir {dir}");
            }
        }
    }

    #[test]
    fn total_derivatives_commute() {
        use rand::{Rng, SeedableRng};
        let c = ctx();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let vars = ["t", "x", "u", "u_t", "u_xy", "u_yz", "u_xxy"];
        for _ in 0..50 {
            let mut e = Scalar::zero();
            for _ in 0..3 {
                let a = Scalar::var(Var::new(vars[rng.gen_range(0..vars.len())]));
                let b = Scalar::var(Var::new(vars[rng.gen_range(0..vars.len())]));
                let k = Scalar::int(rng.gen_range(-3..4));
                e = e.add(&a.mul(&b).mul(&k));
            }
            for da in Direction::ALL {
                for db in Direction::ALL {
                    let ab = c
                        .total_derivative(&c.total_derivative(&e, da).unwrap(), db)
                        .unwrap();
                    let ba = c
                        .total_derivative(&c.total_derivative(&e, db).unwrap(), da)
                        .unwrap();
                    assert_eq!(ab, ba);
                }
            }
        }
    }

    #[test]
    fn contact_forms_small_charts() {
        let th = contact_forms(1).unwrap();
        assert_eq!(th.len(), 2);
        assert_eq!(th[0].to_string(), "(-u1) d(x1) + d(u)");
        assert_eq!(th[1].to_string(), "(-u11) d(x1) + d(u1)");
        let th4 = contact_forms(4).unwrap();
        assert_eq!(th4.len(), 5);
        for f in &th4 {
            assert_eq!(f.homogeneous_degree(), Some(1));
        }
        assert!(contact_forms(0).is_err());
        assert!(contact_forms(5).is_err());
    }

    #[test]
    fn contact_forms_annihilated_by_holonomic_section() {
        // section f = x1*x2: u -> x1*x2, u1 -> x2, u2 -> x1, u12 -> 1, rest 0
        let chart = ContactChart::new(2, &[], 4).unwrap();
        let mut sm = HashMap::new();
        sm.insert(chart.u, s("x1*x2"));
        sm.insert(chart.u1[0], s("x2"));
        sm.insert(chart.u1[1], s("x1"));
        sm.insert(chart.u2(1, 1), Scalar::zero());
        sm.insert(chart.u2(1, 2), Scalar::one());
        sm.insert(chart.u2(2, 2), Scalar::zero());
        let mut gm = HashMap::new();
        let d = |v: Var| Form::differential(&chart.gs, v).unwrap();
        let dx1 = d(chart.x[0]);
        let dx2 = d(chart.x[1]);
        gm.insert(
            chart.gs.coordinate_index(chart.u).unwrap(),
            dx1.scale(&s("x2")).add(&dx2.scale(&s("x1"))),
        );
        gm.insert(chart.gs.coordinate_index(chart.u1[0]).unwrap(), dx2);
        gm.insert(chart.gs.coordinate_index(chart.u1[1]).unwrap(), dx1);
        for (i, j) in [(1, 1), (1, 2), (2, 2)] {
            gm.insert(
                chart.gs.coordinate_index(chart.u2(i, j)).unwrap(),
                Form::zero(&chart.gs),
            );
        }
        let pulled = chart.thetas[0].substitute(&sm, &gm).unwrap();
        assert!(pulled.is_zero(), "j2(f)* theta0 = {pulled}");
        // theta_1 and theta_2 vanish too for this section
        for i in [1, 2] {
            assert!(chart.thetas[i].substitute(&sm, &gm).unwrap().is_zero());
        }
    }
}
