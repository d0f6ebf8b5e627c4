//! Exterior algebra of differential forms over [`Scalar`] coefficients on a
//! declared, ordered generator set.
//!
//! Generators are 1-form symbols, either `coordinate` (the differential of a
//! variable) or `abstract` (a Maurer–Cartan symbol). Opaque placeholders for
//! unknown differentials are the one exception and carry degree 2. Monomials
//! are kept sorted in generator declaration order with anticommutation signs
//! applied on the fly.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use crate::symexpr::{ArithError, Scalar, Var};

pub type GenIdx = u32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GenKind {
    /// The differential of a coordinate variable.
    Coordinate(Var),
    /// An abstract 1-form symbol.
    Abstract,
    /// An opaque stand-in for the unknown differential of an abstract
    /// generator; degree 2, cannot be differentiated again.
    Opaque,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenInfo {
    pub name: String,
    pub kind: GenKind,
}

impl GenInfo {
    pub fn degree(&self) -> u32 {
        match self.kind {
            GenKind::Opaque => 2,
            _ => 1,
        }
    }
}

/// Ordered list of generators plus the variables whose differential is
/// declared to vanish (formal constants such as the spectral parameter).
#[derive(Debug, PartialEq, Eq)]
pub struct GeneratorSet {
    gens: Vec<GenInfo>,
    by_name: HashMap<String, GenIdx>,
    by_var: HashMap<Var, GenIdx>,
    constants: BTreeSet<Var>,
    degree_cap: u32,
}

#[derive(Debug, Default)]
pub struct GeneratorSetBuilder {
    gens: Vec<GenInfo>,
    constants: BTreeSet<Var>,
    degree_cap: Option<u32>,
}

impl GeneratorSetBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares the coordinate generator `d(v)`.
    pub fn coordinate(&mut self, v: Var) -> &mut Self {
        self.gens.push(GenInfo {
            name: format!("d({v})"),
            kind: GenKind::Coordinate(v),
        });
        self
    }

    pub fn abstract_gen(&mut self, name: &str) -> &mut Self {
        self.gens.push(GenInfo {
            name: name.to_string(),
            kind: GenKind::Abstract,
        });
        self
    }

    pub fn opaque(&mut self, name: &str) -> &mut Self {
        self.gens.push(GenInfo {
            name: name.to_string(),
            kind: GenKind::Opaque,
        });
        self
    }

    /// Declares `v` a formal constant: `d(v) = 0`.
    pub fn constant(&mut self, v: Var) -> &mut Self {
        self.constants.insert(v);
        self
    }

    pub fn degree_cap(&mut self, cap: u32) -> &mut Self {
        self.degree_cap = Some(cap);
        self
    }

    pub fn build(&mut self) -> Result<Arc<GeneratorSet>, FormError> {
        let mut by_name = HashMap::new();
        let mut by_var = HashMap::new();
        for (i, g) in self.gens.iter().enumerate() {
            if by_name.insert(g.name.clone(), i as GenIdx).is_some() {
                return Err(FormError::DuplicateGenerator { name: g.name.clone() });
            }
            if let GenKind::Coordinate(v) = g.kind {
                by_var.insert(v, i as GenIdx);
            }
        }
        Ok(Arc::new(GeneratorSet {
            gens: std::mem::take(&mut self.gens),
            by_name,
            by_var,
            constants: std::mem::take(&mut self.constants),
            degree_cap: self.degree_cap.unwrap_or(4),
        }))
    }
}

impl GeneratorSet {
    pub fn len(&self) -> usize {
        self.gens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gens.is_empty()
    }

    pub fn info(&self, idx: GenIdx) -> &GenInfo {
        &self.gens[idx as usize]
    }

    pub fn degree_cap(&self) -> u32 {
        self.degree_cap
    }

    pub fn index_of(&self, name: &str) -> Option<GenIdx> {
        self.by_name.get(name).copied()
    }

    pub fn coordinate_index(&self, v: Var) -> Option<GenIdx> {
        self.by_var.get(&v).copied()
    }

    pub fn is_constant(&self, v: Var) -> bool {
        self.constants.contains(&v)
    }

    pub fn indices(&self) -> impl Iterator<Item = GenIdx> {
        0..self.gens.len() as GenIdx
    }

    fn tuple_degree(&self, tuple: &[GenIdx]) -> u32 {
        tuple.iter().map(|&g| self.info(g).degree()).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FormError {
    #[error("mismatched generator sets")]
    MismatchedGeneratorSets,
    #[error("duplicate generator `{name}`")]
    DuplicateGenerator { name: String },
    #[error("degree cap {cap} exceeded")]
    DegreeCapExceeded { cap: u32 },
    #[error("abstract generator `{name}` has no coordinate exterior derivative")]
    AbstractGeneratorInDerivative { name: String },
    #[error("no differential generator declared for variable `{var}`")]
    MissingDifferential { var: String },
    #[error("variable `{var}` remapped but its differential is not")]
    InconsistentSubstitution { var: String },
    #[error("substituted generator image has wrong degree")]
    BadImageDegree,
    #[error("dependent knowns")]
    DependentKnowns,
    #[error("unknown generator `{name}`")]
    UnknownGenerator { name: String },
    #[error("opaque differential `{name}` cannot be differentiated")]
    OpaqueDifferential { name: String },
    #[error("operation requires a form of degree {expected}")]
    WrongDegree { expected: u32 },
    #[error(transparent)]
    Arith(#[from] ArithError),
}

/// Graded element of the exterior algebra: a map from sorted generator tuples
/// to scalar coefficients. Mixed degrees are allowed; degree-0 terms use the
/// empty tuple.
#[derive(Clone)]
pub struct Form {
    gs: Arc<GeneratorSet>,
    terms: BTreeMap<Vec<GenIdx>, Scalar>,
}

impl PartialEq for Form {
    fn eq(&self, other: &Self) -> bool {
        self.same_set(other) && self.terms == other.terms
    }
}

impl Eq for Form {}

/// Sorts `tuple` in generator order, returning the anticommutation sign, or
/// `None` when a repeated odd-degree generator kills the term.
fn sort_tuple(gs: &GeneratorSet, tuple: &mut Vec<GenIdx>) -> Option<bool> {
    // insertion sort with graded sign bookkeeping; tuples are short
    let mut negative = false;
    for i in 1..tuple.len() {
        let mut j = i;
        while j > 0 && tuple[j - 1] > tuple[j] {
            let da = gs.info(tuple[j - 1]).degree();
            let db = gs.info(tuple[j]).degree();
            if (da * db) % 2 == 1 {
                negative = !negative;
            }
            tuple.swap(j - 1, j);
            j -= 1;
        }
    }
    for w in tuple.windows(2) {
        if w[0] == w[1] && gs.info(w[0]).degree() % 2 == 1 {
            return None;
        }
    }
    Some(negative)
}

impl Form {
    pub fn zero(gs: &Arc<GeneratorSet>) -> Form {
        Form {
            gs: gs.clone(),
            terms: BTreeMap::new(),
        }
    }

    /// A degree-0 form.
    pub fn scalar(gs: &Arc<GeneratorSet>, s: Scalar) -> Form {
        let mut f = Form::zero(gs);
        f.insert(Vec::new(), s);
        f
    }

    /// The generator `idx` with coefficient one.
    pub fn generator(gs: &Arc<GeneratorSet>, idx: GenIdx) -> Form {
        let mut f = Form::zero(gs);
        f.insert(vec![idx], Scalar::one());
        f
    }

    /// The coordinate generator `d(v)`.
    pub fn differential(gs: &Arc<GeneratorSet>, v: Var) -> Result<Form, FormError> {
        match gs.coordinate_index(v) {
            Some(idx) => Ok(Form::generator(gs, idx)),
            None if gs.is_constant(v) => Ok(Form::zero(gs)),
            None => Err(FormError::MissingDifferential { var: v.to_string() }),
        }
    }

    pub fn from_terms(
        gs: &Arc<GeneratorSet>,
        terms: impl IntoIterator<Item = (Vec<GenIdx>, Scalar)>,
    ) -> Form {
        let mut f = Form::zero(gs);
        for (mut tuple, c) in terms {
            match sort_tuple(gs, &mut tuple) {
                None => {}
                Some(neg) => f.insert(tuple, if neg { c.neg() } else { c }),
            }
        }
        f
    }

    pub fn generator_set(&self) -> &Arc<GeneratorSet> {
        &self.gs
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<GenIdx>, &Scalar)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of a sorted tuple.
    pub fn coefficient(&self, tuple: &[GenIdx]) -> Scalar {
        self.terms.get(tuple).cloned().unwrap_or_else(Scalar::zero)
    }

    /// Degrees present in the form.
    pub fn degrees(&self) -> BTreeSet<u32> {
        self.terms.keys().map(|t| self.gs.tuple_degree(t)).collect()
    }

    /// The single degree of a homogeneous nonzero form.
    pub fn homogeneous_degree(&self) -> Option<u32> {
        let ds = self.degrees();
        if ds.len() == 1 {
            ds.into_iter().next()
        } else {
            None
        }
    }

    fn same_set(&self, other: &Form) -> bool {
        Arc::ptr_eq(&self.gs, &other.gs) || self.gs == other.gs
    }

    fn insert(&mut self, tuple: Vec<GenIdx>, c: Scalar) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(tuple) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                let sum = e.get().add(&c);
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    pub fn add(&self, other: &Form) -> Form {
        debug_assert!(self.same_set(other), "mismatched generator sets");
        let mut out = self.clone();
        for (t, c) in &other.terms {
            out.insert(t.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Form) -> Form {
        debug_assert!(self.same_set(other), "mismatched generator sets");
        let mut out = self.clone();
        for (t, c) in &other.terms {
            out.insert(t.clone(), c.neg());
        }
        out
    }

    pub fn neg(&self) -> Form {
        Form {
            gs: self.gs.clone(),
            terms: self.terms.iter().map(|(t, c)| (t.clone(), c.neg())).collect(),
        }
    }

    pub fn scale(&self, s: &Scalar) -> Form {
        if s.is_zero() {
            return Form::zero(&self.gs);
        }
        Form {
            gs: self.gs.clone(),
            terms: self
                .terms
                .iter()
                .map(|(t, c)| (t.clone(), c.mul(s)))
                .collect(),
        }
    }

    /// Graded-anticommutative exterior product.
    pub fn wedge(&self, other: &Form) -> Result<Form, FormError> {
        if !self.same_set(other) {
            return Err(FormError::MismatchedGeneratorSets);
        }
        let cap = self.gs.degree_cap;
        let mut out = Form::zero(&self.gs);
        for (ta, ca) in &self.terms {
            for (tb, cb) in &other.terms {
                let mut merged = Vec::with_capacity(ta.len() + tb.len());
                merged.extend_from_slice(ta);
                merged.extend_from_slice(tb);
                if self.gs.tuple_degree(&merged) > cap {
                    return Err(FormError::DegreeCapExceeded { cap });
                }
                match sort_tuple(&self.gs, &mut merged) {
                    None => {}
                    Some(neg) => {
                        let c = ca.mul(cb);
                        out.insert(merged, if neg { c.neg() } else { c });
                    }
                }
            }
        }
        Ok(out)
    }

    /// Exterior derivative for coordinate generators: `d(f dx^I) = df ^ dx^I`.
    ///
    /// Variables declared constant contribute nothing; abstract generators
    /// are rejected (formal differentiation lives with the abstract
    /// structure-equation engine).
    pub fn exterior_derivative(&self) -> Result<Form, FormError> {
        let mut out = Form::zero(&self.gs);
        for (tuple, c) in &self.terms {
            for &g in tuple {
                match self.gs.info(g).kind {
                    GenKind::Coordinate(_) => {}
                    _ => {
                        return Err(FormError::AbstractGeneratorInDerivative {
                            name: self.gs.info(g).name.clone(),
                        })
                    }
                }
            }
            for v in c.support() {
                let dc = c.partial(v);
                if dc.is_zero() {
                    continue;
                }
                let dv = match self.gs.coordinate_index(v) {
                    Some(idx) => idx,
                    None if self.gs.is_constant(v) => continue,
                    None => {
                        return Err(FormError::MissingDifferential { var: v.to_string() })
                    }
                };
                let mut merged = Vec::with_capacity(tuple.len() + 1);
                merged.push(dv);
                merged.extend_from_slice(tuple);
                if self.gs.tuple_degree(&merged) > self.gs.degree_cap {
                    return Err(FormError::DegreeCapExceeded { cap: self.gs.degree_cap });
                }
                match sort_tuple(&self.gs, &mut merged) {
                    None => {}
                    Some(neg) => out.insert(merged, if neg { dc.neg() } else { dc }),
                }
            }
        }
        Ok(out)
    }

    /// Substitution into coefficients and generators.
    ///
    /// Every variable that is remapped and has a coordinate generator in this
    /// set must have that generator remapped too (`dv ↦ d(image)`); all
    /// generator images must share one target set.
    pub fn substitute(
        &self,
        scalar_map: &HashMap<Var, Scalar>,
        gen_map: &HashMap<GenIdx, Form>,
    ) -> Result<Form, FormError> {
        for v in scalar_map.keys() {
            if let Some(idx) = self.gs.coordinate_index(*v) {
                if !gen_map.contains_key(&idx) {
                    return Err(FormError::InconsistentSubstitution { var: v.to_string() });
                }
            }
        }
        let target: Arc<GeneratorSet> = match gen_map.values().next() {
            Some(img) => img.gs.clone(),
            None => self.gs.clone(),
        };
        for img in gen_map.values() {
            if !Arc::ptr_eq(&img.gs, &target) && img.gs != target {
                return Err(FormError::MismatchedGeneratorSets);
            }
            if !img.is_zero() && img.homogeneous_degree() != Some(1) {
                return Err(FormError::BadImageDegree);
            }
        }
        let resolve = |g: GenIdx| -> Result<Form, FormError> {
            if let Some(img) = gen_map.get(&g) {
                return Ok(img.clone());
            }
            if Arc::ptr_eq(&self.gs, &target) {
                return Ok(Form::generator(&target, g));
            }
            let info = self.gs.info(g);
            match target.index_of(&info.name) {
                Some(idx) => Ok(Form::generator(&target, idx)),
                None => Err(FormError::UnknownGenerator { name: info.name.clone() }),
            }
        };
        let mut out = Form::zero(&target);
        for (tuple, c) in &self.terms {
            let c2 = c.substitute(scalar_map)?;
            let mut acc = Form::scalar(&target, c2);
            for &g in tuple {
                acc = acc.wedge(&resolve(g)?)?;
                if acc.is_zero() {
                    break;
                }
            }
            out = out.add(&acc);
        }
        Ok(out)
    }

    /// Scales by the least common multiple of all coefficient denominators,
    /// producing a polynomial-coefficient multiple of the form. Useful before
    /// solving, where only the module generated by a form matters.
    pub fn cleared_denominators(&self) -> Form {
        use crate::symexpr::{poly_gcd, Poly};
        let mut lcm = Poly::one();
        for c in self.terms.values() {
            let den = c.den();
            if den.is_one() {
                continue;
            }
            let g = poly_gcd(&lcm, den);
            lcm = lcm.mul(&den.exact_div(&g).expect("gcd divides"));
        }
        if lcm.is_one() {
            self.clone()
        } else {
            self.scale(&Scalar::from_poly(lcm))
        }
    }

    /// Applies `op` to every coefficient, dropping terms that map to zero.
    pub fn map_coefficients(
        &self,
        mut op: impl FnMut(&Scalar) -> Result<Scalar, FormError>,
    ) -> Result<Form, FormError> {
        let mut out = Form::zero(&self.gs);
        for (tuple, c) in &self.terms {
            out.insert(tuple.clone(), op(c)?);
        }
        Ok(out)
    }

    /// Re-expresses the form on another generator set, matching generators
    /// by name; coefficients are untouched.
    pub fn transport(&self, target: &Arc<GeneratorSet>) -> Result<Form, FormError> {
        let mut out = Form::zero(target);
        for (tuple, c) in &self.terms {
            let mut mapped = Vec::with_capacity(tuple.len());
            for &g in tuple {
                let name = &self.gs.info(g).name;
                match target.index_of(name) {
                    Some(idx) => mapped.push(idx),
                    None => return Err(FormError::UnknownGenerator { name: name.clone() }),
                }
            }
            match sort_tuple(target, &mut mapped) {
                None => {}
                Some(neg) => out.insert(mapped, if neg { c.neg() } else { c.clone() }),
            }
        }
        Ok(out)
    }

    /// Even (degree-preserving) derivation: applies `coeff_op` to every
    /// coefficient and `gen_op` to every generator slot, Leibniz without
    /// signs. Used for lifts of vector fields to forms.
    pub fn even_derivation(
        &self,
        mut coeff_op: impl FnMut(&Scalar) -> Result<Scalar, FormError>,
        mut gen_op: impl FnMut(GenIdx) -> Result<Form, FormError>,
    ) -> Result<Form, FormError> {
        let mut out = Form::zero(&self.gs);
        for (tuple, c) in &self.terms {
            let dc = coeff_op(c)?;
            if !dc.is_zero() {
                out.insert(tuple.clone(), dc);
            }
            for (slot, &g) in tuple.iter().enumerate() {
                let image = gen_op(g)?;
                if image.is_zero() {
                    continue;
                }
                if !image.is_zero() && image.homogeneous_degree() != Some(self.gs.info(g).degree())
                {
                    return Err(FormError::BadImageDegree);
                }
                for (img_tuple, img_c) in &image.terms {
                    let mut merged = Vec::with_capacity(tuple.len() + img_tuple.len() - 1);
                    merged.extend_from_slice(&tuple[..slot]);
                    merged.extend_from_slice(img_tuple);
                    merged.extend_from_slice(&tuple[slot + 1..]);
                    match sort_tuple(&self.gs, &mut merged) {
                        None => {}
                        Some(neg) => {
                            let coeff = c.mul(img_c);
                            out.insert(merged, if neg { coeff.neg() } else { coeff });
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// The 1-form `df = Σ (∂f/∂v) d(v)` of a scalar on a coordinate chart.
pub fn differential_of_scalar(gs: &Arc<GeneratorSet>, s: &Scalar) -> Result<Form, FormError> {
    let mut out = Form::zero(gs);
    for v in s.support() {
        let ds = s.partial(v);
        if ds.is_zero() {
            continue;
        }
        match gs.coordinate_index(v) {
            Some(idx) => {
                out = out.add(&Form::generator(gs, idx).scale(&ds));
            }
            None if gs.is_constant(v) => {}
            None => return Err(FormError::MissingDifferential { var: v.to_string() }),
        }
    }
    Ok(out)
}

/// Outcome of [`solve_structure`].
#[derive(Debug, Clone, PartialEq)]
pub enum SolveOutcome {
    /// 1-forms `alpha_k` with `r = sum alpha_k ^ knowns_k`.
    Solved(Vec<Form>),
    /// No solution; the irreducible remainder is returned.
    Unsolvable { remainder: Form },
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum EIdx {
    Pivot(usize),
    Free(GenIdx),
}

/// Solves `r = sum_k alpha_k ^ knowns_k` for unknown 1-forms `alpha_k`.
///
/// The knowns must be linearly independent degree-1 forms. Solutions are
/// unique modulo the span of the knowns; the returned representative has its
/// symmetric gauge part along the knowns set to zero, so when `r` has no
/// component in the exterior square of the span the representatives carry no
/// component along the knowns at all.
pub fn solve_structure(r: &Form, knowns: &[Form]) -> Result<SolveOutcome, FormError> {
    let gs = r.generator_set().clone();
    for k in knowns {
        if !(Arc::ptr_eq(&k.gs, &gs) || k.gs == gs) {
            return Err(FormError::MismatchedGeneratorSets);
        }
        if k.is_zero() || k.homogeneous_degree() != Some(1) {
            return Err(FormError::WrongDegree { expected: 1 });
        }
    }
    if !r.is_zero() && r.homogeneous_degree() != Some(2) {
        return Err(FormError::WrongDegree { expected: 2 });
    }

    let m = knowns.len();
    // rows of the known matrix, kept reduced; transform records kp = M * k
    let mut rows: Vec<HashMap<GenIdx, Scalar>> = knowns
        .iter()
        .map(|k| {
            k.terms
                .iter()
                .map(|(t, c)| (t[0], c.clone()))
                .collect::<HashMap<_, _>>()
        })
        .collect();
    let mut transform: Vec<Vec<Scalar>> = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| if i == j { Scalar::one() } else { Scalar::zero() })
                .collect()
        })
        .collect();

    let row_sub = |row: &mut HashMap<GenIdx, Scalar>, factor: &Scalar, src: &HashMap<GenIdx, Scalar>| {
        for (g, c) in src {
            let delta = factor.mul(c);
            let cur = row.remove(g).unwrap_or_else(Scalar::zero);
            let next = cur.sub(&delta);
            if !next.is_zero() {
                row.insert(*g, next);
            }
        }
    };
    let vec_sub = |row: &mut Vec<Scalar>, factor: &Scalar, src: &Vec<Scalar>| {
        for (dst, s) in row.iter_mut().zip(src) {
            *dst = dst.sub(&factor.mul(s));
        }
    };

    // reduced row echelon form with exact pivoting: pivot is the first
    // generator (in canonical order) with a nonzero coefficient
    let mut pivots: Vec<(usize, GenIdx)> = Vec::new(); // (row, pivot column)
    let mut used: Vec<bool> = vec![false; m];
    for _ in 0..m {
        let mut best: Option<(GenIdx, usize)> = None;
        for (i, row) in rows.iter().enumerate() {
            if used[i] || row.is_empty() {
                continue;
            }
            let lead = *row.keys().min().expect("nonempty");
            if best.map(|(g, _)| lead < g).unwrap_or(true) {
                best = Some((lead, i));
            }
        }
        let (col, i) = match best {
            Some(b) => b,
            None => return Err(FormError::DependentKnowns),
        };
        used[i] = true;
        let inv = rows[i][&col].inv()?;
        for c in rows[i].values_mut() {
            *c = c.mul(&inv);
        }
        for t in transform[i].iter_mut() {
            *t = t.mul(&inv);
        }
        let src_row = rows[i].clone();
        let src_t = transform[i].clone();
        for j in 0..m {
            if j == i {
                continue;
            }
            if let Some(f) = rows[j].get(&col).cloned() {
                row_sub(&mut rows[j], &f, &src_row);
                vec_sub(&mut transform[j], &f, &src_t);
            }
        }
        pivots.push((i, col));
    }
    pivots.sort_by_key(|&(_, col)| col);
    let order: Vec<usize> = pivots.iter().map(|&(i, _)| i).collect();
    let pivot_cols: Vec<GenIdx> = pivots.iter().map(|&(_, col)| col).collect();
    let pivot_of: HashMap<GenIdx, usize> = pivot_cols
        .iter()
        .enumerate()
        .map(|(k, &g)| (g, k))
        .collect();
    // reordered reduced rows and transform: kprime[k] has pivot pivot_cols[k]
    let kprime: Vec<HashMap<GenIdx, Scalar>> =
        order.iter().map(|&i| rows[i].clone()).collect();
    let mmat: Vec<Vec<Scalar>> = order.iter().map(|&i| transform[i].clone()).collect();

    // expand r in the adapted basis: g_p ↦ kprime_k - tail_k, free g ↦ g
    let expand = |g: GenIdx| -> Vec<(EIdx, Scalar)> {
        match pivot_of.get(&g) {
            None => vec![(EIdx::Free(g), Scalar::one())],
            Some(&k) => {
                let mut out = vec![(EIdx::Pivot(k), Scalar::one())];
                for (&h, c) in &kprime[k] {
                    if h != g {
                        out.push((EIdx::Free(h), c.neg()));
                    }
                }
                out
            }
        }
    };

    let mut adapted: BTreeMap<(EIdx, EIdx), Scalar> = BTreeMap::new();
    let mut add_adapted = |a: EIdx, b: EIdx, c: Scalar| {
        if a == b || c.is_zero() {
            return;
        }
        let (key, c) = if a < b { ((a, b), c) } else { ((b, a), c.neg()) };
        let cur = adapted.remove(&key).unwrap_or_else(Scalar::zero);
        let next = cur.add(&c);
        if !next.is_zero() {
            adapted.insert(key, next);
        }
    };
    for (tuple, c) in &r.terms {
        let (g, h) = (tuple[0], tuple[1]);
        for (ea, ca) in expand(g) {
            for (eb, cb) in expand(h) {
                add_adapted(ea, eb, c.mul(&ca).mul(&cb));
            }
        }
    }

    // split and reconstruct
    let mut remainder = Form::zero(&gs);
    let mut alpha_free: Vec<HashMap<GenIdx, Scalar>> = vec![HashMap::new(); m];
    let mut kk: HashMap<(usize, usize), Scalar> = HashMap::new();
    for ((a, b), c) in adapted {
        match (a, b) {
            (EIdx::Pivot(j), EIdx::Pivot(k)) => {
                kk.insert((j, k), c);
            }
            (EIdx::Pivot(k), EIdx::Free(h)) => {
                // c * kprime_k ^ g_h = (-c g_h) ^ kprime_k
                let cur = alpha_free[k].remove(&h).unwrap_or_else(Scalar::zero);
                let next = cur.sub(&c);
                if !next.is_zero() {
                    alpha_free[k].insert(h, next);
                }
            }
            (EIdx::Free(g), EIdx::Free(h)) => {
                remainder = remainder.add(&Form::from_terms(
                    &gs,
                    std::iter::once((vec![g, h], c)),
                ));
            }
            (EIdx::Free(_), EIdx::Pivot(_)) => unreachable!("EIdx order"),
        }
    }
    if !remainder.is_zero() {
        return Ok(SolveOutcome::Unsolvable { remainder });
    }

    // alpha'_k = alpha_free_k + 1/2 sum_j C_{kj} kprime_j, C antisymmetric
    let half = Scalar::rational(1, 2);
    let kprime_form = |k: usize| -> Form {
        Form::from_terms(
            &gs,
            kprime[k].iter().map(|(&g, c)| (vec![g], c.clone())),
        )
    };
    let mut alpha_prime: Vec<Form> = Vec::with_capacity(m);
    for k in 0..m {
        let mut f = Form::from_terms(
            &gs,
            alpha_free[k].iter().map(|(&g, c)| (vec![g], c.clone())),
        );
        for j in 0..m {
            let c = if j < k {
                kk.get(&(j, k)).cloned()
            } else if j > k {
                kk.get(&(k, j)).map(|c| c.neg())
            } else {
                None
            };
            if let Some(c) = c {
                f = f.add(&kprime_form(j).scale(&c.mul(&half)));
            }
        }
        alpha_prime.push(f);
    }

    // back to the original knowns: alpha_l = sum_k M_{kl} alpha'_k
    let mut alphas = Vec::with_capacity(m);
    for l in 0..m {
        let mut f = Form::zero(&gs);
        for (k, ap) in alpha_prime.iter().enumerate() {
            f = f.add(&ap.scale(&mmat[k][l]));
        }
        alphas.push(f);
    }
    Ok(SolveOutcome::Solved(alphas))
}

/// Writes a 1-form as an exact scalar combination of independent 1-forms,
/// or returns `None` when it is not in their span.
pub fn express_in_span(
    target: &Form,
    basis: &[Form],
) -> Result<Option<Vec<Scalar>>, FormError> {
    let gs = target.generator_set().clone();
    if !target.is_zero() && target.homogeneous_degree() != Some(1) {
        return Err(FormError::WrongDegree { expected: 1 });
    }
    let m = basis.len();
    let mut rows: Vec<HashMap<GenIdx, Scalar>> = Vec::with_capacity(m);
    for k in basis {
        if !(Arc::ptr_eq(&k.gs, &gs) || k.gs == gs) {
            return Err(FormError::MismatchedGeneratorSets);
        }
        if k.is_zero() || k.homogeneous_degree() != Some(1) {
            return Err(FormError::WrongDegree { expected: 1 });
        }
        rows.push(k.terms.iter().map(|(t, c)| (t[0], c.clone())).collect());
    }
    let mut transform: Vec<Vec<Scalar>> = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| if i == j { Scalar::one() } else { Scalar::zero() })
                .collect()
        })
        .collect();
    let mut pivots: Vec<(usize, GenIdx)> = Vec::new();
    let mut used = vec![false; m];
    for _ in 0..m {
        let mut best: Option<(GenIdx, usize)> = None;
        for (i, row) in rows.iter().enumerate() {
            if used[i] || row.is_empty() {
                continue;
            }
            let lead = *row.keys().min().expect("nonempty");
            if best.map(|(g, _)| lead < g).unwrap_or(true) {
                best = Some((lead, i));
            }
        }
        let (col, i) = match best {
            Some(b) => b,
            None => return Err(FormError::DependentKnowns),
        };
        used[i] = true;
        let inv = rows[i][&col].inv()?;
        for c in rows[i].values_mut() {
            *c = c.mul(&inv);
        }
        for t in transform[i].iter_mut() {
            *t = t.mul(&inv);
        }
        let src_row = rows[i].clone();
        let src_t = transform[i].clone();
        for j in 0..m {
            if j == i {
                continue;
            }
            if let Some(f) = rows[j].get(&col).cloned() {
                for (g, c) in &src_row {
                    let cur = rows[j].remove(g).unwrap_or_else(Scalar::zero);
                    let next = cur.sub(&f.mul(c));
                    if !next.is_zero() {
                        rows[j].insert(*g, next);
                    }
                }
                for (dst, s) in transform[j].iter_mut().zip(&src_t) {
                    *dst = dst.sub(&f.mul(s));
                }
            }
        }
        pivots.push((i, col));
    }
    // eliminate pivots from the target
    let mut rest: HashMap<GenIdx, Scalar> = target
        .terms
        .iter()
        .map(|(t, c)| (t[0], c.clone()))
        .collect();
    let mut d = vec![Scalar::zero(); m];
    for &(row, col) in &pivots {
        if let Some(coeff) = rest.remove(&col) {
            for (g, c) in &rows[row] {
                if *g == col {
                    continue;
                }
                let cur = rest.remove(g).unwrap_or_else(Scalar::zero);
                let next = cur.sub(&coeff.mul(c));
                if !next.is_zero() {
                    rest.insert(*g, next);
                }
            }
            d[row] = coeff;
        }
    }
    if !rest.is_empty() {
        return Ok(None);
    }
    let mut coeffs = Vec::with_capacity(m);
    for l in 0..m {
        let mut c = Scalar::zero();
        for k in 0..m {
            c = c.add(&transform[k][l].mul(&d[k]));
        }
        coeffs.push(c);
    }
    Ok(Some(coeffs))
}

fn coeff_text(c: &Scalar) -> (bool, Option<String>) {
    // (is_negative_rational, rendered magnitude or None for unit)
    if let Some(r) = c.as_rational() {
        use num_traits::Signed;
        let neg = r.is_negative();
        let mag = r.abs();
        if mag.is_integer() && mag.numer() == &num_bigint::BigInt::from(1) {
            return (neg, None);
        }
        let text = if mag.is_integer() {
            mag.numer().to_string()
        } else {
            format!("{}/{}", mag.numer(), mag.denom())
        };
        (neg, Some(text))
    } else {
        (false, Some(format!("({c})")))
    }
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let mut first = true;
        for (tuple, c) in &self.terms {
            let (neg, mag) = coeff_text(c);
            if first {
                if neg {
                    f.write_str("-")?;
                }
                first = false;
            } else if neg {
                f.write_str(" - ")?;
            } else {
                f.write_str(" + ")?;
            }
            let gens = tuple
                .iter()
                .map(|&g| self.gs.info(g).name.as_str())
                .collect::<Vec<_>>()
                .join(" ^ ");
            match (mag, gens.is_empty()) {
                (Some(text), true) => f.write_str(&text)?,
                (Some(text), false) => write!(f, "{text} {gens}")?,
                (None, true) => f.write_str("1")?,
                (None, false) => f.write_str(&gens)?,
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Form({self})")
    }
}

/// Parses the form text syntax: sums of `coef * g1 ^ g2` terms, where
/// coefficients use the scalar expression syntax (juxtaposition also
/// multiplies) and `d(name)` denotes coordinate generators.
pub fn parse_form(gs: &Arc<GeneratorSet>, text: &str) -> Result<Form, crate::symexpr::ParseError> {
    use crate::symexpr::{ParseError, Tok};
    let toks = crate::symexpr::tokenize(text)?;
    struct P<'a> {
        gs: &'a Arc<GeneratorSet>,
        toks: Vec<(usize, Tok)>,
        pos: usize,
        end: usize,
    }
    impl<'a> P<'a> {
        fn peek(&self) -> Option<&Tok> {
            self.toks.get(self.pos).map(|(_, t)| t)
        }
        fn here(&self) -> usize {
            self.toks.get(self.pos).map(|(p, _)| *p).unwrap_or(self.end)
        }
        fn bump(&mut self) -> Option<Tok> {
            let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
            if t.is_some() {
                self.pos += 1;
            }
            t
        }
        fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
            Err(ParseError {
                pos: self.here(),
                msg: msg.into(),
            })
        }
        fn wrap<T, E: std::fmt::Display>(&self, r: Result<T, E>) -> Result<T, ParseError> {
            r.map_err(|e| ParseError {
                pos: self.here(),
                msg: e.to_string(),
            })
        }

        fn starts_atom(&self) -> bool {
            matches!(
                self.peek(),
                Some(Tok::Int(_)) | Some(Tok::Ident(_)) | Some(Tok::LParen)
            )
        }

        fn form(&mut self) -> Result<Form, ParseError> {
            let mut acc = self.term()?;
            loop {
                match self.peek() {
                    Some(Tok::Plus) => {
                        self.bump();
                        acc = acc.add(&self.term()?);
                    }
                    Some(Tok::Minus) => {
                        self.bump();
                        acc = acc.sub(&self.term()?);
                    }
                    _ => return Ok(acc),
                }
            }
        }

        fn term(&mut self) -> Result<Form, ParseError> {
            if let Some(Tok::Minus) = self.peek() {
                self.bump();
                return Ok(self.term()?.neg());
            }
            let mut acc = self.factor()?;
            loop {
                match self.peek() {
                    Some(Tok::Star) => {
                        self.bump();
                        let rhs = self.factor()?;
                        acc = self.wrap(acc.wedge(&rhs))?;
                    }
                    Some(Tok::Slash) => {
                        self.bump();
                        let rhs = self.factor()?;
                        let s = match rhs.as_degree_zero() {
                            Some(s) => s,
                            None => return self.err("division by a form of positive degree"),
                        };
                        let inv = self.wrap(s.inv())?;
                        acc = acc.scale(&inv);
                    }
                    _ if self.starts_atom() => {
                        let rhs = self.factor()?;
                        acc = self.wrap(acc.wedge(&rhs))?;
                    }
                    _ => return Ok(acc),
                }
            }
        }

        fn factor(&mut self) -> Result<Form, ParseError> {
            let mut acc = self.atom()?;
            while let Some(Tok::Caret) = self.peek() {
                self.bump();
                let neg_exp = if let Some(Tok::Minus) = self.peek() {
                    self.bump();
                    true
                } else {
                    false
                };
                if let Some(Tok::Int(n)) = self.peek().cloned() {
                    self.bump();
                    let s = match acc.as_degree_zero() {
                        Some(s) => s,
                        None => return self.err("power of a form of positive degree"),
                    };
                    let e: i64 = match n.try_into() {
                        Ok(e) => e,
                        Err(_) => return self.err("exponent out of range"),
                    };
                    let e = if neg_exp { -e } else { e };
                    let p = self.wrap(s.pow(e))?;
                    acc = Form::scalar(self.gs, p);
                } else if neg_exp {
                    return self.err("expected integer exponent after `^-`");
                } else {
                    let rhs = self.atom()?;
                    acc = self.wrap(acc.wedge(&rhs))?;
                }
            }
            Ok(acc)
        }

        fn atom(&mut self) -> Result<Form, ParseError> {
            match self.bump() {
                Some(Tok::Int(n)) => Ok(Form::scalar(self.gs, Scalar::from_rational(n.into()))),
                Some(Tok::Ident(name)) => {
                    if name == "d" && matches!(self.peek(), Some(Tok::LParen)) {
                        self.bump();
                        let var_name = match self.bump() {
                            Some(Tok::Ident(v)) => v,
                            _ => return self.err("expected variable name in d(...)"),
                        };
                        match self.bump() {
                            Some(Tok::RParen) => {}
                            _ => return self.err("expected `)` after d(...)"),
                        }
                        let v = Var::new(&var_name);
                        self.wrap(Form::differential(self.gs, v))
                    } else if let Some(idx) = self.gs.index_of(&name) {
                        Ok(Form::generator(self.gs, idx))
                    } else {
                        Ok(Form::scalar(self.gs, Scalar::var(Var::new(&name))))
                    }
                }
                Some(Tok::LParen) => {
                    let inner = self.form()?;
                    match self.bump() {
                        Some(Tok::RParen) => Ok(inner),
                        _ => self.err("expected `)`"),
                    }
                }
                _ => self.err("expected a term"),
            }
        }
    }
    let mut p = P {
        gs,
        toks,
        pos: 0,
        end: text.len(),
    };
    let out = p.form()?;
    if p.pos != p.toks.len() {
        return p.err("trailing input");
    }
    Ok(out)
}

impl Form {
    /// The scalar content of a form with no positive-degree terms.
    pub fn as_degree_zero(&self) -> Option<Scalar> {
        if self.terms.keys().all(|t| t.is_empty()) {
            Some(self.coefficient(&[]))
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::parse_scalar;

    fn chart(vars: &[&str]) -> Arc<GeneratorSet> {
        let mut b = GeneratorSetBuilder::new();
        for v in vars {
            b.coordinate(Var::new(v));
        }
        b.build().unwrap()
    }

    fn s(text: &str) -> Scalar {
        parse_scalar(text).unwrap()
    }

    #[test]
    fn wedge_nilpotent_and_anticommutative() {
        let gs = chart(&["t", "x", "z"]);
        let dt = Form::differential(&gs, Var::new("t")).unwrap();
        let dz = Form::differential(&gs, Var::new("z")).unwrap();
        assert!(dt.wedge(&dt).unwrap().is_zero());
        let sum = dt.wedge(&dz).unwrap().add(&dz.wedge(&dt).unwrap());
        assert!(sum.is_zero());
    }

    #[test]
    fn wedge_two_by_two_determinant() {
        let gs = chart(&["t", "z"]);
        let a = parse_form(&gs, "b11 d(t) + b14 d(z)").unwrap();
        let b = parse_form(&gs, "b41 d(t) + b44 d(z)").unwrap();
        let w = a.wedge(&b).unwrap();
        let expected = parse_form(&gs, "(b11*b44 - b14*b41) d(t) ^ d(z)").unwrap();
        assert_eq!(w, expected);
    }

    #[test]
    fn exterior_derivative_leibniz() {
        let gs = chart(&["t", "u", "u_t"]);
        let u_du = parse_form(&gs, "u d(u)").unwrap();
        assert!(u_du.exterior_derivative().unwrap().is_zero());
        let f = parse_form(&gs, "u_t d(t)").unwrap();
        let df = f.exterior_derivative().unwrap();
        assert_eq!(df, parse_form(&gs, "d(u_t) ^ d(t)").unwrap());
    }

    #[test]
    fn contact_form_derivative() {
        let gs = chart(&[
            "t", "x", "y", "z", "u", "u_t", "u_x", "u_y", "u_z",
        ]);
        let theta = parse_form(&gs, "d(u) - u_t d(t) - u_x d(x) - u_y d(y) - u_z d(z)").unwrap();
        let dtheta = theta.exterior_derivative().unwrap();
        let expected = parse_form(
            &gs,
            "d(t) ^ d(u_t) + d(x) ^ d(u_x) + d(y) ^ d(u_y) + d(z) ^ d(u_z)",
        )
        .unwrap();
        assert_eq!(dtheta, expected);
    }

    #[test]
    fn d_squared_vanishes_on_scalars() {
        let gs = chart(&["a", "b", "c"]);
        for text in ["a*b^2 - c", "(a + b)/(c + 2)", "a^3*c - b*c + 7/3"] {
            let f = Form::scalar(&gs, s(text));
            let ddf = f
                .exterior_derivative()
                .unwrap()
                .exterior_derivative()
                .unwrap();
            assert!(ddf.is_zero(), "d(d({text})) != 0");
        }
    }

    #[test]
    fn abstract_generator_rejected_by_d() {
        let mut b = GeneratorSetBuilder::new();
        b.coordinate(Var::new("t")).abstract_gen("eta1");
        let gs = b.build().unwrap();
        let f = parse_form(&gs, "eta1").unwrap();
        assert!(matches!(
            f.exterior_derivative(),
            Err(FormError::AbstractGeneratorInDerivative { .. })
        ));
    }

    #[test]
    fn constants_have_zero_differential() {
        let mut b = GeneratorSetBuilder::new();
        b.coordinate(Var::new("x")).constant(Var::new("lambda"));
        let gs = b.build().unwrap();
        let f = Form::scalar(&gs, s("lambda*x"));
        let df = f.exterior_derivative().unwrap();
        assert_eq!(df, parse_form(&gs, "lambda d(x)").unwrap());
    }

    #[test]
    fn substitute_direct_image() {
        let mut b = GeneratorSetBuilder::new();
        b.coordinate(Var::new("v")).coordinate(Var::new("q_0_0"));
        let gs = b.build().unwrap();
        let f = parse_form(&gs, "(1/v) d(v)").unwrap();
        let mut sm = HashMap::new();
        sm.insert(Var::new("v"), s("q_0_0"));
        let mut gm = HashMap::new();
        gm.insert(
            gs.coordinate_index(Var::new("v")).unwrap(),
            Form::differential(&gs, Var::new("q_0_0")).unwrap(),
        );
        let got = f.substitute(&sm, &gm).unwrap();
        assert_eq!(got, parse_form(&gs, "(1/q_0_0) d(q_0_0)").unwrap());
    }

    #[test]
    fn substitute_empty_maps_is_identity() {
        let gs = chart(&["x", "y"]);
        let f = parse_form(&gs, "(x^2 + y) d(x) ^ d(y)").unwrap();
        assert_eq!(f.substitute(&HashMap::new(), &HashMap::new()).unwrap(), f);
    }

    #[test]
    fn substitute_requires_consistent_maps() {
        let gs = chart(&["v"]);
        let f = parse_form(&gs, "v d(v)").unwrap();
        let mut sm = HashMap::new();
        sm.insert(Var::new("v"), s("2"));
        assert!(matches!(
            f.substitute(&sm, &HashMap::new()),
            Err(FormError::InconsistentSubstitution { .. })
        ));
    }

    #[test]
    fn solve_zero_right_side() {
        let gs = chart(&["t", "x", "z"]);
        let dz = Form::differential(&gs, Var::new("z")).unwrap();
        let dt = Form::differential(&gs, Var::new("t")).unwrap();
        let r = Form::zero(&gs);
        match solve_structure(&r, &[dz, dt]).unwrap() {
            SolveOutcome::Solved(alphas) => {
                assert!(alphas.iter().all(Form::is_zero));
            }
            other => panic!("expected solution, got {other:?}"),
        }
    }

    #[test]
    fn solve_unsolvable_remainder() {
        let gs = chart(&["t", "x", "z"]);
        let r = parse_form(&gs, "d(t) ^ d(x)").unwrap();
        let dz = Form::differential(&gs, Var::new("z")).unwrap();
        match solve_structure(&r, &[dz]).unwrap() {
            SolveOutcome::Unsolvable { remainder } => {
                assert_eq!(remainder, r);
            }
            other => panic!("expected unsolvable, got {other:?}"),
        }
    }

    #[test]
    fn solve_dependent_knowns_rejected() {
        let gs = chart(&["t", "x"]);
        let dt = Form::differential(&gs, Var::new("t")).unwrap();
        let dt2 = dt.scale(&s("2"));
        assert!(matches!(
            solve_structure(&Form::zero(&gs), &[dt, dt2]),
            Err(FormError::DependentKnowns)
        ));
    }

    #[test]
    fn solve_reconstructs_right_side() {
        // generic solvable case: r = a ^ k1 + b ^ k2 with messy knowns
        let gs = chart(&["t", "x", "y", "z"]);
        let k1 = parse_form(&gs, "d(t) + u d(x)").unwrap();
        let k2 = parse_form(&gs, "(u^2 + 1) d(y) - d(x)").unwrap();
        let a = parse_form(&gs, "3 d(z) - u d(y)").unwrap();
        let b = parse_form(&gs, "d(t) + d(z)").unwrap();
        let r = a.wedge(&k1).unwrap().add(&b.wedge(&k2).unwrap());
        match solve_structure(&r, &[k1.clone(), k2.clone()]).unwrap() {
            SolveOutcome::Solved(alphas) => {
                let rebuilt = alphas[0]
                    .wedge(&k1)
                    .unwrap()
                    .add(&alphas[1].wedge(&k2).unwrap());
                assert_eq!(rebuilt, r);
            }
            other => panic!("expected solution, got {other:?}"),
        }
    }

    #[test]
    fn render_roundtrip() {
        let mut b = GeneratorSetBuilder::new();
        b.coordinate(Var::new("t"))
            .coordinate(Var::new("u_xy"))
            .abstract_gen("eta1")
            .abstract_gen("xi4");
        let gs = b.build().unwrap();
        for text in [
            "1/3 eta1 ^ xi4 - 2 d(t) ^ d(u_xy)",
            "(u_xy^2 - 1) d(t) + eta1",
            "0",
            "(1/(u_xy - 1)) d(t) ^ eta1 ^ xi4",
        ] {
            let f = parse_form(&gs, text).unwrap();
            let again = parse_form(&gs, &f.to_string()).unwrap();
            assert_eq!(f, again, "roundtrip of `{text}` via `{f}`");
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_scalar() -> impl Strategy<Value = Scalar> {
            let leaf = prop_oneof![
                (-4i64..5).prop_map(Scalar::int),
                Just(Scalar::var(Var::new("p"))),
                Just(Scalar::var(Var::new("q"))),
            ];
            leaf.prop_recursive(2, 8, 2, |inner| {
                prop_oneof![
                    (inner.clone(), inner.clone()).prop_map(|(a, b)| a.add(&b)),
                    (inner.clone(), inner).prop_map(|(a, b)| a.mul(&b)),
                ]
            })
        }

        fn arb_form(gs: Arc<GeneratorSet>, max_deg: usize) -> impl Strategy<Value = Form> {
            let n = gs.len() as GenIdx;
            let term = (
                arb_scalar(),
                proptest::collection::vec(0..n, 0..=max_deg),
            );
            proptest::collection::vec(term, 0..4).prop_map(move |terms| {
                Form::from_terms(&gs, terms.into_iter().map(|(c, t)| (t, c)))
            })
        }

        fn small_chart() -> Arc<GeneratorSet> {
            let mut b = GeneratorSetBuilder::new();
            for v in ["p", "q", "r"] {
                b.coordinate(Var::new(v));
            }
            b.degree_cap(6);
            b.build().unwrap()
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn wedge_associative(
                a in arb_form(small_chart(), 1),
                b in arb_form(small_chart(), 1),
                c in arb_form(small_chart(), 2),
            ) {
                let lhs = a.wedge(&b).unwrap().wedge(&c).unwrap();
                let rhs = a.wedge(&b.wedge(&c).unwrap()).unwrap();
                prop_assert_eq!(lhs, rhs);
            }

            #[test]
            fn wedge_graded_anticommutative(
                a in arb_form(small_chart(), 1),
                b in arb_form(small_chart(), 1),
            ) {
                // restrict to homogeneous degree-1 pieces
                let gs = small_chart();
                let a1 = Form::from_terms(&gs, a.terms().filter(|(t, _)| t.len() == 1).map(|(t, c)| (t.clone(), c.clone())));
                let b1 = Form::from_terms(&gs, b.terms().filter(|(t, _)| t.len() == 1).map(|(t, c)| (t.clone(), c.clone())));
                let lhs = a1.wedge(&b1).unwrap();
                let rhs = b1.wedge(&a1).unwrap().neg();
                prop_assert_eq!(lhs, rhs);
            }

            #[test]
            fn d_squared_zero(f in arb_form(small_chart(), 2)) {
                let ddf = f.exterior_derivative().unwrap().exterior_derivative().unwrap();
                prop_assert!(ddf.is_zero(), "d²({}) = {}", f, ddf);
            }

            #[test]
            fn substitution_is_algebra_morphism(
                a in arb_form(small_chart(), 1),
                b in arb_form(small_chart(), 1),
            ) {
                // p -> q + 1, d(p) -> d(q)
                let gs = small_chart();
                let mut sm = HashMap::new();
                sm.insert(Var::new("p"), Scalar::var(Var::new("q")).add(&Scalar::one()));
                let mut gm = HashMap::new();
                gm.insert(
                    gs.coordinate_index(Var::new("p")).unwrap(),
                    Form::differential(&gs, Var::new("q")).unwrap(),
                );
                let lhs = a.wedge(&b).unwrap().substitute(&sm, &gm).unwrap();
                let rhs = a
                    .substitute(&sm, &gm)
                    .unwrap()
                    .wedge(&b.substitute(&sm, &gm).unwrap())
                    .unwrap();
                prop_assert_eq!(lhs, rhs);
                let sum_lhs = a.add(&b).substitute(&sm, &gm).unwrap();
                let sum_rhs = a.substitute(&sm, &gm).unwrap().add(&b.substitute(&sm, &gm).unwrap());
                prop_assert_eq!(sum_lhs, sum_rhs);
            }
        }
    }
}
