//! Complete decision procedure for systems over a virtually abelian group,
//! given as an extension of a finite group `F` by `Z^n`: project to `F`,
//! enumerate the finitely many `F`-solutions, turn each into an integer
//! linear system via the conjugation action, and solve that exactly.

use std::collections::BTreeMap;

use crate::eq::system::{EqSystem, EqWord};
use crate::group::{FiniteTable, Word};
use crate::{RhError, Result};

pub type Matrix = Vec<Vec<i64>>;

fn mat_identity(n: usize) -> Matrix {
    (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect()
}

fn mat_mul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    let m = b[0].len();
    let k = b.len();
    (0..n)
        .map(|i| (0..m).map(|j| (0..k).map(|t| a[i][t] * b[t][j]).sum()).collect())
        .collect()
}

fn mat_vec(a: &Matrix, v: &[i64]) -> Vec<i64> {
    a.iter().map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

fn vec_add(a: &[i64], b: &[i64]) -> Vec<i64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn mat_neg(a: &Matrix) -> Matrix {
    a.iter().map(|row| row.iter().map(|x| -x).collect()).collect()
}

/// An element of the extension, written `s(f) * a` with `f` in the finite
/// quotient and `a` a coordinate vector of the abelian kernel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VaElem {
    pub f: usize,
    pub a: Vec<i64>,
}

/// A virtually abelian group presented as an extension of a finite group by
/// `Z^n`: the quotient multiplication table, the conjugation action of the
/// quotient on the kernel, a cross-section, the kernel decomposition of
/// every generator, and the section cocycle (zero for split extensions).
#[derive(Debug, Clone)]
pub struct VAStructure {
    pub n: usize,
    pub f: FiniteTable,
    /// `rho[f]` is the matrix of `a -> s(f)^-1 a s(f)`.
    pub rho: Vec<Matrix>,
    /// Cross-section words, one per quotient element; the identity gets the
    /// empty word.
    pub section: Vec<Word>,
    /// Decomposition `g = s(f) * a` of each group generator.
    pub gens: BTreeMap<String, VaElem>,
    /// `cocycle[f][g]` is the kernel element with `s(f) s(g) = s(fg) * c`.
    pub cocycle: Vec<Vec<Vec<i64>>>,
}

impl VAStructure {
    /// Check all structural invariants: matrix shapes, `rho` a homomorphism
    /// (`rho(fg) = rho(g) rho(f)` for the right conjugation action), trivial
    /// data at the identity, and associativity of the pair multiplication
    /// (which is exactly the cocycle condition).
    pub fn validate(&self) -> Result<()> {
        let size = self.f.size();
        if self.rho.len() != size || self.section.len() != size || self.cocycle.len() != size {
            return Err(RhError::MalformedInput(
                "rho, section and cocycle must have one entry per quotient element".into(),
            ));
        }
        for m in &self.rho {
            if m.len() != self.n || m.iter().any(|row| row.len() != self.n) {
                return Err(RhError::MalformedInput(format!(
                    "rho matrices must be {0}x{0}",
                    self.n
                )));
            }
        }
        if self.rho[0] != mat_identity(self.n) {
            return Err(RhError::MalformedInput("rho at the identity must be the identity".into()));
        }
        if !self.section[0].is_empty() {
            return Err(RhError::MalformedInput(
                "the cross-section of the identity must be the empty word".into(),
            ));
        }
        for f in 0..size {
            for g in 0..size {
                let fg = self.f.mul(f, g);
                if self.rho[fg] != mat_mul(&self.rho[g], &self.rho[f]) {
                    return Err(RhError::MalformedInput(format!(
                        "rho is not a homomorphism at ({f}, {g})"
                    )));
                }
                if self.cocycle[f][g].len() != self.n {
                    return Err(RhError::MalformedInput("cocycle vectors must have length n".into()));
                }
            }
            if self.cocycle[0][f].iter().any(|&x| x != 0)
                || self.cocycle[f][0].iter().any(|&x| x != 0)
            {
                return Err(RhError::MalformedInput(
                    "the cocycle must vanish on the identity".into(),
                ));
            }
        }
        // associativity of the pair multiplication = the cocycle condition
        for f in 0..size {
            for g in 0..size {
                for h in 0..size {
                    let sf = VaElem { f, a: vec![0; self.n] };
                    let sg = VaElem { f: g, a: vec![0; self.n] };
                    let sh = VaElem { f: h, a: vec![0; self.n] };
                    let left = self.mul(&self.mul(&sf, &sg), &sh);
                    let right = self.mul(&sf, &self.mul(&sg, &sh));
                    if left != right {
                        return Err(RhError::MalformedInput(format!(
                            "cocycle is not associative at ({f}, {g}, {h})"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn identity(&self) -> VaElem {
        VaElem { f: 0, a: vec![0; self.n] }
    }

    pub fn mul(&self, x: &VaElem, y: &VaElem) -> VaElem {
        let f = self.f.mul(x.f, y.f);
        let a = vec_add(
            &vec_add(&self.cocycle[x.f][y.f], &mat_vec(&self.rho[y.f], &x.a)),
            &y.a,
        );
        VaElem { f, a }
    }

    pub fn inv(&self, x: &VaElem) -> VaElem {
        let g = self.f.inv(x.f);
        let mut a = mat_vec(&self.rho[g], &x.a);
        for (c, co) in a.iter_mut().zip(&self.cocycle[x.f][g]) {
            *c = -*c - co;
        }
        VaElem { f: g, a }
    }

    /// Evaluate a word over the group generators.
    pub fn eval_word(&self, w: &Word) -> Result<VaElem> {
        let mut acc = self.identity();
        for g in w.letters() {
            let e = self.gens.get(g.name()).ok_or_else(|| {
                RhError::MalformedInput(format!("generator {:?} has no decomposition", g.name()))
            })?;
            let e = match g.sign() {
                crate::group::Sign::Pos => e.clone(),
                crate::group::Sign::Neg => self.inv(e),
            };
            acc = self.mul(&acc, &e);
        }
        Ok(acc)
    }
}

/// Outcome of the complete procedure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VaOutcome {
    Sat(BTreeMap<String, VaElem>),
    Unsat,
}

/// Affine expression over the unknown coordinate vectors: a coefficient
/// matrix per unknown plus a constant vector.
#[derive(Clone)]
struct Affine {
    coeff: BTreeMap<String, Matrix>,
    cst: Vec<i64>,
}

impl Affine {
    fn constant(v: Vec<i64>) -> Affine {
        Affine { coeff: BTreeMap::new(), cst: v }
    }

    fn apply(&mut self, m: &Matrix) {
        for c in self.coeff.values_mut() {
            *c = mat_mul(m, c);
        }
        self.cst = mat_vec(m, &self.cst);
    }

    fn add(&mut self, other: &Affine) {
        for (k, m) in &other.coeff {
            match self.coeff.get_mut(k) {
                Some(c) => {
                    for (row, orow) in c.iter_mut().zip(m) {
                        for (x, y) in row.iter_mut().zip(orow) {
                            *x += *y;
                        }
                    }
                }
                None => {
                    self.coeff.insert(k.clone(), m.clone());
                }
            }
        }
        self.cst = vec_add(&self.cst, &other.cst);
    }
}

/// Symbolic evaluation state: the quotient part is concrete (fixed by the
/// chosen F-assignment), the kernel part is affine in the unknown vectors.
fn eval_symbolic(
    va: &VAStructure,
    w: &EqWord,
    f_of: &BTreeMap<String, usize>,
    params: &BTreeMap<String, VaElem>,
) -> Result<(usize, Affine)> {
    let mut f_acc = 0usize;
    let mut expr = Affine::constant(vec![0; va.n]);
    for t in w {
        if t.is_neutral() {
            continue;
        }
        // resolve the term to (quotient part, affine kernel part)
        let (g, term) = if let Some(p) = params.get(&t.name) {
            let e = if t.inverse { va.inv(p) } else { p.clone() };
            (e.f, Affine::constant(e.a))
        } else if let Some(&fx) = f_of.get(&t.name) {
            if !t.inverse {
                let mut coeff = BTreeMap::new();
                coeff.insert(t.name.clone(), mat_identity(va.n));
                (fx, Affine { coeff, cst: vec![0; va.n] })
            } else {
                // (f, a)^-1 = (f^-1, -c(f, f^-1) - rho(f^-1) a)
                let g = va.f.inv(fx);
                let mut coeff = BTreeMap::new();
                coeff.insert(t.name.clone(), mat_neg(&va.rho[g]));
                let cst = va.cocycle[fx][g].iter().map(|&x| -x).collect();
                (g, Affine { coeff, cst })
            }
        } else {
            return Err(RhError::Structural(format!("unresolved name {}", t.name)));
        };
        // (F, E) * (g, term) = (F g, c(F, g) + rho(g)(E) + term)
        expr.apply(&va.rho[g]);
        expr.add(&Affine::constant(va.cocycle[f_acc][g].clone()));
        expr.add(&term);
        f_acc = va.f.mul(f_acc, g);
    }
    Ok((f_acc, expr))
}

/// Smith-style diagonalization over the integers: returns `(u, d, v)` with
/// `u * a * v = d` diagonal, `u` and `v` unimodular.
pub fn diagonalize(a: &[Vec<i128>]) -> (Vec<Vec<i128>>, Vec<Vec<i128>>, Vec<Vec<i128>>) {
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    let mut d: Vec<Vec<i128>> = a.to_vec();
    let mut u: Vec<Vec<i128>> = (0..rows)
        .map(|i| (0..rows).map(|j| i128::from(i == j)).collect())
        .collect();
    let mut v: Vec<Vec<i128>> = (0..cols)
        .map(|i| (0..cols).map(|j| i128::from(i == j)).collect())
        .collect();
    let mut t = 0usize;
    while t < rows.min(cols) {
        // find a pivot of minimal absolute value in the remaining block
        let mut pivot: Option<(usize, usize)> = None;
        for i in t..rows {
            for j in t..cols {
                if d[i][j] != 0
                    && pivot.map_or(true, |(pi, pj)| d[i][j].abs() < d[pi][pj].abs())
                {
                    pivot = Some((i, j));
                }
            }
        }
        let (pi, pj) = match pivot {
            Some(p) => p,
            None => break,
        };
        d.swap(t, pi);
        u.swap(t, pi);
        for row in d.iter_mut() {
            row.swap(t, pj);
        }
        for row in v.iter_mut() {
            row.swap(t, pj);
        }
        // eliminate column and row t; repeat because remainders can refill
        let mut dirty = true;
        while dirty {
            dirty = false;
            for i in t + 1..rows {
                if d[i][t] != 0 {
                    let q = d[i][t].div_euclid(d[t][t]);
                    for j in 0..cols {
                        d[i][j] -= q * d[t][j];
                    }
                    for j in 0..rows {
                        u[i][j] -= q * u[t][j];
                    }
                    if d[i][t] != 0 {
                        d.swap(t, i);
                        u.swap(t, i);
                        dirty = true;
                    }
                }
            }
            for j in t + 1..cols {
                if d[t][j] != 0 {
                    let q = d[t][j].div_euclid(d[t][t]);
                    for i in 0..rows {
                        d[i][j] -= q * d[i][t];
                    }
                    for i in 0..cols {
                        v[i][j] -= q * v[i][t];
                    }
                    if d[t][j] != 0 {
                        for row in d.iter_mut() {
                            row.swap(t, j);
                        }
                        for row in v.iter_mut() {
                            row.swap(t, j);
                        }
                        dirty = true;
                    }
                }
            }
        }
        t += 1;
    }
    (u, d, v)
}

/// Solution of `A z = b` over the integers: a particular solution plus a
/// basis of the solution lattice of `A z = 0`.
pub struct LinearSolution {
    pub particular: Vec<i64>,
    pub lattice: Vec<Vec<i64>>,
}

/// Solve `A z = b` exactly; `None` when no integer solution exists.
pub fn solve_linear(a: &[Vec<i64>], b: &[i64]) -> Option<LinearSolution> {
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    let big: Vec<Vec<i128>> =
        a.iter().map(|row| row.iter().map(|&x| i128::from(x)).collect()).collect();
    let (u, d, v) = diagonalize(&big);
    // y = U b, then D (V^-1 z) = y
    let y: Vec<i128> = (0..rows)
        .map(|i| (0..rows).map(|j| u[i][j] * i128::from(b[j])).sum())
        .collect();
    let mut w = vec![0i128; cols];
    for i in 0..rows {
        let di = if i < cols { d[i][i] } else { 0 };
        if di != 0 {
            if y[i] % di != 0 {
                return None;
            }
            w[i] = y[i] / di;
        } else if y[i] != 0 {
            return None;
        }
    }
    let z: Vec<i128> = (0..cols).map(|i| (0..cols).map(|j| v[i][j] * w[j]).sum()).collect();
    let particular = z.iter().map(|&x| i64::try_from(x).ok()).collect::<Option<Vec<i64>>>()?;
    let mut lattice = Vec::new();
    for j in 0..cols {
        let free = j >= rows.min(cols) || d[j][j] == 0;
        if free {
            let col: Option<Vec<i64>> =
                (0..cols).map(|i| i64::try_from(v[i][j]).ok()).collect();
            lattice.push(col?);
        }
    }
    Some(LinearSolution { particular, lattice })
}

/// Decide the system over the virtually abelian group.  Complete: `Sat`
/// comes with a witness, `Unsat` is definitive.
pub fn va_decide(sys: &EqSystem, va: &VAStructure) -> Result<VaOutcome> {
    va.validate()?;
    if !sys.constraints.is_empty() {
        return Err(RhError::Unsupported(
            "language constraints are not defined over the virtually abelian backend".into(),
        ));
    }
    let mut params: BTreeMap<String, VaElem> = BTreeMap::new();
    for (p, w) in &sys.params {
        params.insert(p.clone(), va.eval_word(w)?);
    }
    let unknowns: Vec<&String> = sys.unknowns.iter().collect();
    let m = unknowns.len();
    let size = va.f.size();

    let total = size.pow(u32::try_from(m).map_err(|_| {
        RhError::Unsupported("too many unknowns for quotient enumeration".into())
    })?);
    for code in 0..total {
        let mut f_of: BTreeMap<String, usize> = BTreeMap::new();
        let mut c = code;
        for x in &unknowns {
            f_of.insert((*x).clone(), c % size);
            c /= size;
        }
        if let Some(witness) = try_f_assignment(sys, va, &f_of, &params)? {
            return Ok(VaOutcome::Sat(witness));
        }
    }
    Ok(VaOutcome::Unsat)
}

fn try_f_assignment(
    sys: &EqSystem,
    va: &VAStructure,
    f_of: &BTreeMap<String, usize>,
    params: &BTreeMap<String, VaElem>,
) -> Result<Option<BTreeMap<String, VaElem>>> {
    let unknowns: Vec<&String> = sys.unknowns.iter().collect();
    let n = va.n;
    let m = unknowns.len();
    let col_of = |name: &String| unknowns.iter().position(|u| *u == name).unwrap() * n;

    // equations: quotient part must vanish, kernel part becomes linear rows
    let mut rows: Vec<Vec<i64>> = Vec::new();
    let mut rhs: Vec<i64> = Vec::new();
    for e in &sys.equations {
        let (f, expr) = eval_symbolic(va, e, f_of, params)?;
        if f != 0 {
            return Ok(None);
        }
        for i in 0..n {
            let mut row = vec![0i64; n * m];
            for (name, mat) in &expr.coeff {
                let base = col_of(name);
                for j in 0..n {
                    row[base + j] += mat[i][j];
                }
            }
            rows.push(row);
            rhs.push(-expr.cst[i]);
        }
    }
    let solution = match solve_linear(&rows, &rhs) {
        Some(s) => s,
        None => return Ok(None),
    };

    // inequations: a nontrivial quotient part discharges the inequation;
    // the rest are forbidden affine conditions on the parameter lattice
    struct Forbidden {
        /// rows: n, cols: lattice rank
        mat: Vec<Vec<i64>>,
        cst: Vec<i64>,
    }
    let mut forbidden: Vec<Forbidden> = Vec::new();
    let rank = solution.lattice.len();
    for ineq in &sys.inequations {
        let (f, expr) = eval_symbolic(va, ineq, f_of, params)?;
        if f != 0 {
            continue;
        }
        // value on z0 + N t: cst' + M' t
        let full_row = |i: usize| -> Vec<i64> {
            let mut row = vec![0i64; n * m];
            for (name, mat) in &expr.coeff {
                let base = col_of(name);
                for j in 0..n {
                    row[base + j] += mat[i][j];
                }
            }
            row
        };
        let mut mat = Vec::new();
        let mut cst = Vec::new();
        for i in 0..n {
            let row = full_row(i);
            cst.push(
                expr.cst[i]
                    + row.iter().zip(&solution.particular).map(|(x, y)| x * y).sum::<i64>(),
            );
            mat.push(
                (0..rank)
                    .map(|j| row.iter().zip(&solution.lattice[j]).map(|(x, y)| x * y).sum())
                    .collect::<Vec<i64>>(),
            );
        }
        // identically zero on the coset: this quotient assignment is dead
        if cst.iter().all(|&x| x == 0) && mat.iter().all(|r| r.iter().all(|&x| x == 0)) {
            return Ok(None);
        }
        forbidden.push(Forbidden { mat, cst });
    }

    // a rank-k lattice is never covered by finitely many proper affine
    // subsets, so a witness exists; find one by a growing box search
    let eval_forbidden = |f: &Forbidden, t: &[i64]| -> bool {
        // true when the forbidden condition is violated, i.e. value != 0
        (0..f.cst.len()).any(|i| {
            f.cst[i] + f.mat[i].iter().zip(t).map(|(x, y)| x * y).sum::<i64>() != 0
        })
    };
    let mut radius = 0i64;
    loop {
        let mut t = vec![-radius; rank];
        'box_scan: loop {
            if forbidden.iter().all(|f| eval_forbidden(f, &t)) {
                // assemble the witness z = z0 + N t
                let mut z = solution.particular.clone();
                for (j, &tj) in t.iter().enumerate() {
                    for (zi, ni) in z.iter_mut().zip(&solution.lattice[j]) {
                        *zi += tj * ni;
                    }
                }
                let mut witness = BTreeMap::new();
                for (idx, u) in unknowns.iter().enumerate() {
                    witness.insert(
                        (*u).clone(),
                        VaElem { f: f_of[*u], a: z[idx * n..(idx + 1) * n].to_vec() },
                    );
                }
                return Ok(Some(witness));
            }
            // next point of the box
            for j in 0..rank {
                if t[j] < radius {
                    t[j] += 1;
                    continue 'box_scan;
                }
                t[j] = -radius;
            }
            break;
        }
        radius += 1;
        if radius > 1 + i64::try_from(forbidden.len()).unwrap_or(i64::MAX - 1) * 2 {
            // cannot happen: each forbidden condition is a proper affine
            // subset and the box of radius > 2 * #conditions escapes them
            return Err(RhError::Structural(
                "witness search exhausted the guaranteed box".into(),
            ));
        }
        if rank == 0 {
            // the coset is a single point; the conditions are constants and
            // were all violated or we would have returned above
            return Ok(None);
        }
    }
}

/// Parse the line-oriented description of a [`VAStructure`]:
///
/// ```text
/// rank = 2
/// forder = 2
/// ftable = 0 1 ; 1 0
/// rho 0 = 1 0 ; 0 1
/// rho 1 = -1 0 ; 0 -1
/// section 0 =
/// section 1 = t
/// gen a = 0 [1,0]
/// gen t = 1 [0,0]
/// cocycle 1 1 = [0,0]
/// ```
///
/// `cocycle` lines are optional (zero for split extensions).
pub fn parse_va(text: &str) -> Result<VAStructure> {
    let mut rank: Option<usize> = None;
    let mut forder: Option<usize> = None;
    let mut ftable: Option<Vec<usize>> = None;
    let mut rho: BTreeMap<usize, Matrix> = BTreeMap::new();
    let mut section: BTreeMap<usize, Word> = BTreeMap::new();
    let mut gens: BTreeMap<String, VaElem> = BTreeMap::new();
    let mut cocycle: BTreeMap<(usize, usize), Vec<i64>> = BTreeMap::new();

    let parse_vec = |s: &str, line: usize| -> Result<Vec<i64>> {
        let inner = s
            .trim()
            .strip_prefix('[')
            .and_then(|x| x.strip_suffix(']'))
            .ok_or(RhError::Parse { line, msg: "expected [v1,v2,...]".into() })?;
        if inner.trim().is_empty() {
            return Ok(Vec::new());
        }
        inner
            .split(',')
            .map(|x| {
                x.trim()
                    .parse::<i64>()
                    .map_err(|e| RhError::Parse { line, msg: e.to_string() })
            })
            .collect()
    };
    let parse_mat = |s: &str, line: usize| -> Result<Matrix> {
        s.split(';')
            .map(|row| {
                row.split_whitespace()
                    .map(|x| {
                        x.parse::<i64>()
                            .map_err(|e| RhError::Parse { line, msg: e.to_string() })
                    })
                    .collect()
            })
            .collect()
    };

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        let (head, value) = content
            .split_once('=')
            .ok_or(RhError::Parse { line, msg: "expected KEY = VALUE".into() })?;
        let head: Vec<&str> = head.split_whitespace().collect();
        let value = value.trim();
        let idx = |s: &str| -> Result<usize> {
            s.parse().map_err(|e: std::num::ParseIntError| RhError::Parse {
                line,
                msg: e.to_string(),
            })
        };
        match head.as_slice() {
            ["rank"] => rank = Some(idx(value)?),
            ["forder"] => forder = Some(idx(value)?),
            ["ftable"] => {
                ftable = Some(
                    value
                        .split(&[';', ' '][..])
                        .filter(|s| !s.is_empty())
                        .map(idx)
                        .collect::<Result<_>>()?,
                )
            }
            ["rho", f] => {
                rho.insert(idx(f)?, parse_mat(value, line)?);
            }
            ["section", f] => {
                let w = if value.is_empty() {
                    Word::empty()
                } else {
                    Word::parse(value).map_err(|e| RhError::Parse { line, msg: e.to_string() })?
                };
                section.insert(idx(f)?, w);
            }
            ["gen", name] => {
                let (f, v) = value
                    .split_once(' ')
                    .ok_or(RhError::Parse { line, msg: "expected `gen NAME = F [VEC]`".into() })?;
                gens.insert(
                    name.to_string(),
                    VaElem { f: idx(f.trim())?, a: parse_vec(v, line)? },
                );
            }
            ["cocycle", f, g] => {
                cocycle.insert((idx(f)?, idx(g)?), parse_vec(value, line)?);
            }
            _ => return Err(RhError::Parse { line, msg: format!("unknown key {head:?}") }),
        }
    }

    let n = rank.ok_or(RhError::MalformedInput("missing rank".into()))?;
    let size = forder.ok_or(RhError::MalformedInput("missing forder".into()))?;
    let flat = ftable.ok_or(RhError::MalformedInput("missing ftable".into()))?;
    let f = FiniteTable::new(size, flat)?;
    let mut rho_v = Vec::new();
    let mut section_v = Vec::new();
    for i in 0..size {
        rho_v.push(
            rho.remove(&i)
                .ok_or_else(|| RhError::MalformedInput(format!("missing rho {i}")))?,
        );
        section_v.push(
            section
                .remove(&i)
                .ok_or_else(|| RhError::MalformedInput(format!("missing section {i}")))?,
        );
    }
    let mut cocycle_v = vec![vec![vec![0i64; n]; size]; size];
    for ((a, b), v) in cocycle {
        if a >= size || b >= size || v.len() != n {
            return Err(RhError::MalformedInput("cocycle entry out of range".into()));
        }
        cocycle_v[a][b] = v;
    }
    let va = VAStructure { n, f, rho: rho_v, section: section_v, gens, cocycle: cocycle_v };
    va.validate()?;
    Ok(va)
}

/// Exhaustive check of the system over all assignments with quotient parts
/// free and kernel coordinates in `[-radius, radius]` — the independent
/// oracle for [`va_decide`].
pub fn va_box_search(sys: &EqSystem, va: &VAStructure, radius: i64) -> Result<Option<()>> {
    let mut params: BTreeMap<String, VaElem> = BTreeMap::new();
    for (p, w) in &sys.params {
        params.insert(p.clone(), va.eval_word(w)?);
    }
    let unknowns: Vec<&String> = sys.unknowns.iter().collect();
    let mut values: Vec<VaElem> = Vec::new();
    // all elements with coordinates in the box
    let mut coords = vec![vec![]];
    for _ in 0..va.n {
        let mut next = Vec::new();
        for c in &coords {
            for x in -radius..=radius {
                let mut v: Vec<i64> = c.clone();
                v.push(x);
                next.push(v);
            }
        }
        coords = next;
    }
    for f in 0..va.f.size() {
        for c in &coords {
            values.push(VaElem { f, a: c.clone() });
        }
    }
    let eval = |w: &EqWord, assign: &BTreeMap<String, VaElem>| -> Result<VaElem> {
        let mut acc = va.identity();
        for t in w {
            if t.is_neutral() {
                continue;
            }
            let v = assign
                .get(&t.name)
                .or_else(|| params.get(&t.name))
                .ok_or_else(|| RhError::Structural(format!("unresolved name {}", t.name)))?;
            let v = if t.inverse { va.inv(v) } else { v.clone() };
            acc = va.mul(&acc, &v);
        }
        Ok(acc)
    };
    let mut stack: Vec<BTreeMap<String, VaElem>> = vec![BTreeMap::new()];
    for u in &unknowns {
        let mut next = Vec::new();
        for a in &stack {
            for v in &values {
                let mut b = a.clone();
                b.insert((*u).clone(), v.clone());
                next.push(b);
            }
        }
        stack = next;
    }
    for assign in &stack {
        let ok = sys
            .equations
            .iter()
            .map(|e| eval(e, assign).map(|v| v == va.identity()))
            .collect::<Result<Vec<bool>>>()?
            .into_iter()
            .all(|x| x)
            && sys
                .inequations
                .iter()
                .map(|i| eval(i, assign).map(|v| v != va.identity()))
                .collect::<Result<Vec<bool>>>()?
                .into_iter()
                .all(|x| x);
        if ok {
            return Ok(Some(()));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eq::system::parse_system;

    const Z2: &str = "
rank = 2
forder = 1
ftable = 0
rho 0 = 1 0 ; 0 1
section 0 =
gen a = 0 [1,0]
gen b = 0 [0,1]
";

    const DIHEDRAL: &str = "
rank = 1
forder = 2
ftable = 0 1 ; 1 0
rho 0 = 1
rho 1 = -1
section 0 =
section 1 = t
gen a = 0 [1]
gen t = 1 [0]
";

    fn z2() -> VAStructure {
        parse_va(Z2).unwrap()
    }

    fn dihedral() -> VAStructure {
        parse_va(DIHEDRAL).unwrap()
    }

    #[test]
    fn pair_arithmetic_matches_the_dihedral_relations() {
        let va = dihedral();
        let a = va.eval_word(&Word::parse("a").unwrap()).unwrap();
        let t = va.eval_word(&Word::parse("t").unwrap()).unwrap();
        // t^2 = 1 and t a t = a^-1
        assert_eq!(va.mul(&t, &t), va.identity());
        let tat = va.mul(&va.mul(&t, &a), &t);
        assert_eq!(tat, va.inv(&a));
        // word evaluation agrees with pair arithmetic
        assert_eq!(va.eval_word(&Word::parse("taT").unwrap()).unwrap(), va.inv(&a));
    }

    #[test]
    fn non_homomorphism_is_rejected() {
        let bad = "
rank = 1
forder = 2
ftable = 0 1 ; 1 0
rho 0 = 1
rho 1 = 2
section 0 =
section 1 = t
gen a = 0 [1]
gen t = 1 [0]
";
        match parse_va(bad) {
            Err(RhError::MalformedInput(msg)) => assert!(msg.contains("homomorphism")),
            other => panic!("expected a malformed-input error, got {other:?}"),
        }
    }

    #[test]
    fn even_power_is_solvable_and_odd_power_is_not() {
        let va = z2();
        let sat = parse_system("unknowns: x\nparam g = aaaaaa\neq: x x g^-1").unwrap();
        match va_decide(&sat, &va).unwrap() {
            VaOutcome::Sat(w) => assert_eq!(w["x"], VaElem { f: 0, a: vec![3, 0] }),
            VaOutcome::Unsat => panic!("x^2 = a^6 must be solvable"),
        }
        let unsat = parse_system("unknowns: x\nparam g = aaa\neq: x x g^-1").unwrap();
        assert_eq!(va_decide(&unsat, &va).unwrap(), VaOutcome::Unsat);
    }

    #[test]
    fn dihedral_conjugation_flips_the_translation() {
        let va = dihedral();
        // x a x^-1 a = 1, i.e. x a x^-1 = a^-1: any reflection works
        let sys = parse_system("unknowns: x\nparam g = a\neq: x g x^-1 g").unwrap();
        match va_decide(&sys, &va).unwrap() {
            VaOutcome::Sat(w) => {
                assert_eq!(w["x"].f, 1, "the witness must be in the reflecting coset");
                let witness = &w["x"];
                let a = va.eval_word(&Word::parse("a").unwrap()).unwrap();
                let conj = va.mul(&va.mul(witness, &a), &va.inv(witness));
                assert_eq!(conj, va.inv(&a));
            }
            VaOutcome::Unsat => panic!("the reflecting coset solves the equation"),
        }
    }

    #[test]
    fn pinned_unknown_with_contradicting_inequation_is_unsat() {
        let va = z2();
        let sys = parse_system("unknowns: x\nparam g = a\neq: x g^-1\nineq: x g^-1").unwrap();
        assert_eq!(va_decide(&sys, &va).unwrap(), VaOutcome::Unsat);
    }

    #[test]
    fn inequation_with_nontrivial_quotient_part_is_discharged() {
        let va = dihedral();
        // x = t forces a nontrivial quotient part, so x != 1 costs nothing
        let sys = parse_system("unknowns: x\nparam g = t\neq: x g^-1\nineq: x").unwrap();
        match va_decide(&sys, &va).unwrap() {
            VaOutcome::Sat(w) => assert_eq!(w["x"], VaElem { f: 1, a: vec![0] }),
            VaOutcome::Unsat => panic!("x = t is a solution"),
        }
    }

    #[test]
    fn diagonalization_is_exact_on_small_matrices() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let rows = rng.gen_range(1..4);
            let cols = rng.gen_range(1..4);
            let a: Vec<Vec<i128>> = (0..rows)
                .map(|_| (0..cols).map(|_| rng.gen_range(-6..=6)).collect())
                .collect();
            let (u, d, v) = diagonalize(&a);
            // u * a * v = d, and d is diagonal
            let mul = |x: &Vec<Vec<i128>>, y: &Vec<Vec<i128>>| -> Vec<Vec<i128>> {
                (0..x.len())
                    .map(|i| {
                        (0..y[0].len())
                            .map(|j| (0..y.len()).map(|t| x[i][t] * y[t][j]).sum())
                            .collect()
                    })
                    .collect()
            };
            let uav = mul(&mul(&u, &a), &v);
            assert_eq!(uav, d);
            for (i, row) in d.iter().enumerate() {
                for (j, &x) in row.iter().enumerate() {
                    if i != j {
                        assert_eq!(x, 0, "off-diagonal entry left over");
                    }
                }
            }
        }
    }

    #[test]
    fn linear_solver_agrees_with_brute_force() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..100 {
            let rows = rng.gen_range(1..3);
            let cols = rng.gen_range(1..3);
            let a: Vec<Vec<i64>> = (0..rows)
                .map(|_| (0..cols).map(|_| rng.gen_range(-3..=3)).collect())
                .collect();
            let b: Vec<i64> = (0..rows).map(|_| rng.gen_range(-4..=4)).collect();
            // brute force over a generous box
            let mut brute = false;
            let r = 12i64;
            let mut z = vec![-r; cols];
            'scan: loop {
                if a.iter()
                    .zip(&b)
                    .all(|(row, &bi)| row.iter().zip(&z).map(|(x, y)| x * y).sum::<i64>() == bi)
                {
                    brute = true;
                    break;
                }
                for j in 0..cols {
                    if z[j] < r {
                        z[j] += 1;
                        continue 'scan;
                    }
                    z[j] = -r;
                }
                break;
            }
            match solve_linear(&a, &b) {
                Some(sol) => {
                    // verify the particular solution and a lattice vector
                    for (row, &bi) in a.iter().zip(&b) {
                        let val: i64 =
                            row.iter().zip(&sol.particular).map(|(x, y)| x * y).sum();
                        assert_eq!(val, bi);
                    }
                    for l in &sol.lattice {
                        for row in &a {
                            let val: i64 = row.iter().zip(l).map(|(x, y)| x * y).sum();
                            assert_eq!(val, 0);
                        }
                    }
                }
                None => assert!(
                    !brute,
                    "solver said unsolvable but brute force found {z:?} for {a:?} = {b:?}"
                ),
            }
        }
    }

    #[test]
    fn decision_agrees_with_box_search_on_random_systems() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let va = dihedral();
        let params = ["g", "h"];
        for round in 0..25 {
            let mut text = String::from("unknowns: x, y\nparam g = aa\nparam h = taT\n");
            let names = ["x", "y", "g", "h"];
            for _ in 0..rng.gen_range(1..=2) {
                let len = rng.gen_range(1..=4);
                let w: Vec<String> = (0..len)
                    .map(|_| {
                        let n = names[rng.gen_range(0..names.len())];
                        if rng.gen_bool(0.4) {
                            format!("{n}^-1")
                        } else {
                            n.to_string()
                        }
                    })
                    .collect();
                text.push_str(&format!("eq: {}\n", w.join(" ")));
            }
            if rng.gen_bool(0.6) {
                let n = names[rng.gen_range(0..2)];
                text.push_str(&format!("ineq: {n}\n"));
            }
            let sys = parse_system(&text).unwrap();
            let expected = va_box_search(&sys, &va, 10).unwrap().is_some();
            let got = matches!(va_decide(&sys, &va).unwrap(), VaOutcome::Sat(_));
            assert_eq!(got, expected, "disagreement in round {round}: {text}");
            let _ = params;
        }
    }

    #[test]
    fn sat_witnesses_verify_by_pair_arithmetic() {
        let va = dihedral();
        let sys =
            parse_system("unknowns: x, y\nparam g = a\neq: x y g^-1\nineq: x\nineq: y").unwrap();
        match va_decide(&sys, &va).unwrap() {
            VaOutcome::Sat(w) => {
                let g = va.eval_word(&Word::parse("a").unwrap()).unwrap();
                let prod = va.mul(&w["x"], &w["y"]);
                assert_eq!(prod, g);
                assert_ne!(w["x"], va.identity());
                assert_ne!(w["y"], va.identity());
            }
            VaOutcome::Unsat => panic!("x y = a with x, y nontrivial is solvable"),
        }
    }
}
