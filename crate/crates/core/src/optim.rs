//! Exact rational linear programming (two-phase dense simplex with Bland's
//! rule) and convex-hull membership built on it.

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::scalar::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Ge,
    Le,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<Rational>,
    pub rel: Relation,
    pub rhs: Rational,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Bound {
    pub lower: Option<Rational>,
    pub upper: Option<Rational>,
}

/// Minimize `objective . x` subject to the constraints and bounds.
/// Variables are free unless bounded.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<Rational>,
    pub constraints: Vec<Constraint>,
    pub bounds: Vec<Bound>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    /// `duals[i]` belongs to `constraints[i]`; when every finite bound is a
    /// zero lower bound, `value == sum_i duals[i] * rhs[i]`.
    Optimal { x: Vec<Rational>, value: Rational, duals: Vec<Rational> },
    Infeasible,
    /// `ray` keeps feasibility and strictly decreases the objective.
    Unbounded { x: Vec<Rational>, ray: Vec<Rational> },
}

impl LinearProgram {
    pub fn new(objective: Vec<Rational>) -> Self {
        let n = objective.len();
        LinearProgram { objective, constraints: Vec::new(), bounds: vec![Bound::default(); n] }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn constrain(&mut self, coeffs: Vec<Rational>, rel: Relation, rhs: Rational) -> &mut Self {
        self.constraints.push(Constraint { coeffs, rel, rhs });
        self
    }

    pub fn bound(&mut self, j: usize, lower: Option<Rational>, upper: Option<Rational>) -> &mut Self {
        self.bounds[j] = Bound { lower, upper };
        self
    }

    pub fn nonnegative(&mut self, j: usize) -> &mut Self {
        self.bound(j, Some(Rational::zero()), None)
    }
}

struct Tableau {
    rows: Vec<Vec<Rational>>,
    rhs: Vec<Rational>,
    basis: Vec<usize>,
}

enum Phase {
    Optimal,
    Unbounded(usize),
}

impl Tableau {
    fn pivot(&mut self, r: usize, e: usize, reduced: &mut [Rational], value: &mut Rational) {
        let p = self.rows[r][e].clone();
        if !p.is_one() {
            for v in self.rows[r].iter_mut() {
                if !v.is_zero() {
                    *v /= &p;
                }
            }
            self.rhs[r] /= &p;
        }
        let nz: Vec<usize> = (0..self.rows[r].len()).filter(|&j| !self.rows[r][j].is_zero()).collect();
        let prow = self.rows[r].clone();
        let prhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r || self.rows[i][e].is_zero() {
                continue;
            }
            let f = self.rows[i][e].clone();
            for &j in &nz {
                let d = &f * &prow[j];
                self.rows[i][j] -= d;
            }
            self.rhs[i] -= &f * &prhs;
        }
        if !reduced[e].is_zero() {
            let f = reduced[e].clone();
            for &j in &nz {
                reduced[j] -= &f * &prow[j];
            }
            *value += &f * &prhs;
        }
        self.basis[r] = e;
    }

    /// Minimizes `cost` from the current basic feasible solution. `value`
    /// tracks the objective; only `allowed` columns may enter.
    fn run(&mut self, cost: &[Rational], allowed: &[bool]) -> (Phase, Vec<Rational>, Rational) {
        let ncols = cost.len();
        let mut reduced = cost.to_vec();
        let mut value = Rational::zero();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = &cost[b];
            if cb.is_zero() {
                continue;
            }
            for j in 0..ncols {
                if !self.rows[i][j].is_zero() {
                    reduced[j] -= cb * &self.rows[i][j];
                }
            }
            value += cb * &self.rhs[i];
        }
        loop {
            let entering = (0..ncols).find(|&j| allowed[j] && reduced[j].is_negative());
            let Some(e) = entering else {
                return (Phase::Optimal, reduced, value);
            };
            let mut best: Option<(usize, Rational)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][e];
                if a.is_positive() {
                    let ratio = &self.rhs[i] / a;
                    let better = match &best {
                        None => true,
                        Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
                    };
                    if better {
                        best = Some((i, ratio));
                    }
                }
            }
            match best {
                None => return (Phase::Unbounded(e), reduced, value),
                Some((r, _)) => self.pivot(r, e, &mut reduced, &mut value),
            }
        }
    }
}

/// How an original variable is written in terms of nonnegative columns.
struct VarMap {
    offset: Rational,
    cols: Vec<(usize, Rational)>,
}

pub fn lp_solve(lp: &LinearProgram) -> Result<LpOutcome> {
    let n = lp.num_vars();
    if lp.bounds.len() != n {
        return Err(Error::DimensionMismatch(format!("{} bounds for {} variables", lp.bounds.len(), n)));
    }
    for (i, c) in lp.constraints.iter().enumerate() {
        if c.coeffs.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "constraint {i} has {} coefficients for {n} variables",
                c.coeffs.len()
            )));
        }
    }

    // Variables: shift and split into nonnegative columns.
    let mut maps = Vec::with_capacity(n);
    let mut ncols = 0usize;
    let mut extra_rows: Vec<(usize, Rational)> = Vec::new();
    for b in &lp.bounds {
        match (&b.lower, &b.upper) {
            (Some(l), u) => {
                maps.push(VarMap { offset: l.clone(), cols: vec![(ncols, Rational::one())] });
                if let Some(u) = u {
                    extra_rows.push((ncols, u - l));
                }
                ncols += 1;
            }
            (None, Some(u)) => {
                maps.push(VarMap { offset: u.clone(), cols: vec![(ncols, -Rational::one())] });
                ncols += 1;
            }
            (None, None) => {
                maps.push(VarMap {
                    offset: Rational::zero(),
                    cols: vec![(ncols, Rational::one()), (ncols + 1, -Rational::one())],
                });
                ncols += 2;
            }
        }
    }
    let nstruct = ncols;

    let mut rows: Vec<(Vec<Rational>, Relation, Rational)> = Vec::new();
    for c in &lp.constraints {
        let mut coeffs = vec![Rational::zero(); nstruct];
        let mut rhs = c.rhs.clone();
        for (j, a) in c.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            rhs -= a * &maps[j].offset;
            for (col, k) in &maps[j].cols {
                coeffs[*col] += a * k;
            }
        }
        rows.push((coeffs, c.rel, rhs));
    }
    for (col, cap) in &extra_rows {
        let mut coeffs = vec![Rational::zero(); nstruct];
        coeffs[*col] = Rational::one();
        rows.push((coeffs, Relation::Le, cap.clone()));
    }
    let m = rows.len();
    let nslack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let art0 = nstruct + nslack;
    let total = art0 + m;

    let mut tab = Tableau { rows: Vec::with_capacity(m), rhs: Vec::with_capacity(m), basis: Vec::with_capacity(m) };
    let mut sign = Vec::with_capacity(m);
    let mut slack = nstruct;
    for (i, (coeffs, rel, rhs)) in rows.into_iter().enumerate() {
        let mut row = vec![Rational::zero(); total];
        row[..nstruct].clone_from_slice(&coeffs);
        match rel {
            Relation::Ge => {
                row[slack] = -Rational::one();
                slack += 1;
            }
            Relation::Le => {
                row[slack] = Rational::one();
                slack += 1;
            }
            Relation::Eq => {}
        }
        let mut rhs = rhs;
        let s = if rhs.is_negative() { -Rational::one() } else { Rational::one() };
        if s.is_negative() {
            for v in row.iter_mut() {
                *v = -v.clone();
            }
            rhs = -rhs;
        }
        row[art0 + i] = Rational::one();
        tab.rows.push(row);
        tab.rhs.push(rhs);
        tab.basis.push(art0 + i);
        sign.push(s);
    }

    // Phase one: minimize the sum of artificials.
    let mut cost1 = vec![Rational::zero(); total];
    for c in cost1.iter_mut().skip(art0) {
        *c = Rational::one();
    }
    let all = vec![true; total];
    let (_, _, v1) = tab.run(&cost1, &all);
    if v1.is_positive() {
        return Ok(LpOutcome::Infeasible);
    }
    // Push remaining (zero-level) artificials out of the basis.
    for i in 0..m {
        if tab.basis[i] >= art0 {
            if let Some(j) = (0..art0).find(|&j| !tab.rows[i][j].is_zero()) {
                let mut dummy = vec![Rational::zero(); total];
                let mut dv = Rational::zero();
                tab.pivot(i, j, &mut dummy, &mut dv);
            }
        }
    }

    // Phase two.
    let mut cost2 = vec![Rational::zero(); total];
    let mut constant = Rational::zero();
    for (j, vm) in maps.iter().enumerate() {
        constant += &lp.objective[j] * &vm.offset;
        for (col, k) in &vm.cols {
            cost2[*col] += &lp.objective[j] * k;
        }
    }
    let mut allowed = vec![true; total];
    for a in allowed.iter_mut().skip(art0) {
        *a = false;
    }
    let (phase, reduced, value) = tab.run(&cost2, &allowed);

    let mut ystd = vec![Rational::zero(); total];
    for (i, &b) in tab.basis.iter().enumerate() {
        ystd[b] = tab.rhs[i].clone();
    }
    let recover = |cols: &[Rational], with_offset: bool| -> Vec<Rational> {
        maps.iter()
            .map(|vm| {
                let mut v = if with_offset { vm.offset.clone() } else { Rational::zero() };
                for (col, k) in &vm.cols {
                    v += k * &cols[*col];
                }
                v
            })
            .collect()
    };
    let x = recover(&ystd, true);
    match phase {
        Phase::Optimal => {
            let duals = (0..lp.constraints.len())
                .map(|i| -(&reduced[art0 + i]) * &sign[i])
                .collect();
            Ok(LpOutcome::Optimal { x, value: value + constant, duals })
        }
        Phase::Unbounded(e) => {
            let mut dir = vec![Rational::zero(); total];
            dir[e] = Rational::one();
            for (i, &b) in tab.basis.iter().enumerate() {
                dir[b] = -tab.rows[i][e].clone();
            }
            Ok(LpOutcome::Unbounded { x, ray: recover(&dir, false) })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum HullMembership {
    /// Convex weights reproducing the point exactly.
    Inside { weights: Vec<Rational> },
    /// `<separator, point> < level <= <separator, g>` for every generator `g`.
    Outside { separator: Vec<Rational>, level: Rational },
}

impl HullMembership {
    pub fn is_inside(&self) -> bool {
        matches!(self, HullMembership::Inside { .. })
    }
}

pub fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).fold(Rational::zero(), |acc, (x, y)| acc + x * y)
}

pub fn hull_membership(point: &[Rational], generators: &[Vec<Rational>]) -> Result<HullMembership> {
    let d = point.len();
    if let Some(g) = generators.iter().find(|g| g.len() != d) {
        return Err(Error::DimensionMismatch(format!("generator of length {} for a point of length {d}", g.len())));
    }
    if generators.is_empty() {
        return Err(Error::DimensionMismatch("no generators".into()));
    }
    let k = generators.len();
    let mut lp = LinearProgram::new(vec![Rational::zero(); k]);
    for j in 0..k {
        lp.nonnegative(j);
    }
    lp.constrain(vec![Rational::one(); k], Relation::Eq, Rational::one());
    for (c, p) in point.iter().enumerate() {
        lp.constrain(generators.iter().map(|g| g[c].clone()).collect(), Relation::Eq, p.clone());
    }
    match lp_solve(&lp)? {
        LpOutcome::Optimal { x, .. } => return Ok(HullMembership::Inside { weights: x }),
        LpOutcome::Unbounded { .. } => {
            return Err(Error::LpFailure("feasibility problem reported unbounded".into()))
        }
        LpOutcome::Infeasible => {}
    }
    // Separation: minimize <X, p> - s over -1 <= X <= 1, <X, g> >= s.
    let mut obj = point.to_vec();
    obj.push(-Rational::one());
    let mut sep = LinearProgram::new(obj);
    for c in 0..d {
        sep.bound(c, Some(-Rational::one()), Some(Rational::one()));
    }
    for g in generators {
        let mut row = g.clone();
        row.push(-Rational::one());
        sep.constrain(row, Relation::Ge, Rational::zero());
    }
    match lp_solve(&sep)? {
        LpOutcome::Optimal { mut x, value, .. } if value.is_negative() => {
            let level = x.pop().expect("level variable");
            Ok(HullMembership::Outside { separator: x, level })
        }
        other => Err(Error::LpFailure(format!("no separator for an infeasible hull problem: {other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat};

    #[test]
    fn lower_bounded_minimum() {
        let mut lp = LinearProgram::new(vec![int(1)]);
        lp.constrain(vec![int(1)], Relation::Ge, int(3));
        match lp_solve(&lp).unwrap() {
            LpOutcome::Optimal { x, value, duals } => {
                assert_eq!(x, vec![int(3)]);
                assert_eq!(value, int(3));
                assert_eq!(duals, vec![int(1)]);
            }
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn unbounded_below() {
        let mut lp = LinearProgram::new(vec![int(1)]);
        lp.constrain(vec![int(1)], Relation::Le, int(3));
        match lp_solve(&lp).unwrap() {
            LpOutcome::Unbounded { ray, .. } => assert_eq!(ray, vec![int(-1)]),
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn infeasible_and_dimension_errors() {
        let mut lp = LinearProgram::new(vec![int(0)]);
        lp.constrain(vec![int(1)], Relation::Ge, int(2));
        lp.constrain(vec![int(1)], Relation::Le, int(1));
        assert_eq!(lp_solve(&lp).unwrap(), LpOutcome::Infeasible);
        lp.constrain(vec![int(1), int(2)], Relation::Le, int(1));
        assert!(matches!(lp_solve(&lp), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn textbook_problem_with_duals() {
        // max 3x + 5y st x <= 4, 2y <= 12, 3x + 2y <= 18, x,y >= 0
        let mut lp = LinearProgram::new(vec![int(-3), int(-5)]);
        lp.nonnegative(0).nonnegative(1);
        lp.constrain(vec![int(1), int(0)], Relation::Le, int(4));
        lp.constrain(vec![int(0), int(2)], Relation::Le, int(12));
        lp.constrain(vec![int(3), int(2)], Relation::Le, int(18));
        match lp_solve(&lp).unwrap() {
            LpOutcome::Optimal { x, value, duals } => {
                assert_eq!(x, vec![int(2), int(6)]);
                assert_eq!(value, int(-36));
                let dual_value = duals[0].clone() * int(4) + duals[1].clone() * int(12) + duals[2].clone() * int(18);
                assert_eq!(dual_value, value);
                assert_eq!(duals, vec![int(0), rat(-3, 2), int(-1)]);
            }
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn box_bounds_and_equalities() {
        let mut lp = LinearProgram::new(vec![int(1), int(1)]);
        lp.bound(0, Some(int(-1)), Some(int(1))).bound(1, None, Some(int(5)));
        lp.constrain(vec![int(1), int(1)], Relation::Eq, int(2));
        match lp_solve(&lp).unwrap() {
            LpOutcome::Optimal { value, x, .. } => {
                assert_eq!(value, int(2));
                assert_eq!(x[0].clone() + x[1].clone(), int(2));
            }
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn degenerate_redundant_rows() {
        let mut lp = LinearProgram::new(vec![int(1), int(2)]);
        lp.nonnegative(0).nonnegative(1);
        lp.constrain(vec![int(1), int(1)], Relation::Eq, int(1));
        lp.constrain(vec![int(2), int(2)], Relation::Eq, int(2));
        match lp_solve(&lp).unwrap() {
            LpOutcome::Optimal { value, .. } => assert_eq!(value, int(1)),
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn hull_examples() {
        let gens = vec![vec![int(1), int(0)], vec![int(0), int(1)]];
        match hull_membership(&[int(1), int(0)], &gens).unwrap() {
            HullMembership::Inside { weights } => assert_eq!(weights, vec![int(1), int(0)]),
            o => panic!("{o:?}"),
        }
        match hull_membership(&[rat(1, 2), rat(1, 2)], &gens).unwrap() {
            HullMembership::Inside { weights } => assert_eq!(weights, vec![rat(1, 2), rat(1, 2)]),
            o => panic!("{o:?}"),
        }
        let p = [int(1), int(1)];
        match hull_membership(&p, &gens).unwrap() {
            HullMembership::Outside { separator, level } => {
                assert!(dot(&separator, &p) < level);
                for g in &gens {
                    assert!(dot(&separator, g) >= level);
                }
            }
            o => panic!("{o:?}"),
        }
    }
}
