use super::{add, call, div, mul, neg, pow, sub, Expr, Func};

impl Expr {
    /// Exact partial derivative with respect to `var`.
    ///
    /// The result is simplified only by the constructor rules (constant
    /// folding and 0/1 identities). `abs` differentiates to `sign`, which is
    /// reported by [`Expr::is_smooth`].
    pub fn diff(&self, var: &str) -> Expr {
        self.diff_seeded(&[(var, 1.0)])
    }

    /// Derivative along the vector `(lx, ly)`: `lx * d/dx + ly * d/dy`.
    ///
    /// Differentiates once along the direction rather than summing two
    /// partials, so a linear argument `a x + b y` folds to the constant
    /// `a lx + b ly`; for plane waves along the level direction that is an
    /// exact zero.
    pub fn directional_diff(&self, lx: f64, ly: f64) -> Expr {
        self.diff_seeded(&[("x", lx), ("y", ly)])
    }

    fn varies(&self, seed: &[(&str, f64)]) -> bool {
        seed.iter().any(|&(v, w)| w != 0.0 && self.depends_on(v))
    }

    /// Derivative where each variable `v` moves at rate `seed[v]` (zero for
    /// variables not listed).
    fn diff_seeded(&self, seed: &[(&str, f64)]) -> Expr {
        match self {
            Expr::Const(_) => Expr::Const(0.0),
            Expr::Var(n) => Expr::Const(seed.iter().find(|(v, _)| *v == &**n).map_or(0.0, |&(_, w)| w)),
            Expr::Neg(a) => neg(a.diff_seeded(seed)),
            Expr::Add(a, b) => add(a.diff_seeded(seed), b.diff_seeded(seed)),
            Expr::Sub(a, b) => sub(a.diff_seeded(seed), b.diff_seeded(seed)),
            Expr::Mul(a, b) => {
                let (u, v) = (a.as_ref().clone(), b.as_ref().clone());
                add(mul(a.diff_seeded(seed), v), mul(u, b.diff_seeded(seed)))
            }
            Expr::Div(a, b) => {
                let (u, v) = (a.as_ref().clone(), b.as_ref().clone());
                let num = sub(mul(a.diff_seeded(seed), v.clone()), mul(u, b.diff_seeded(seed)));
                div(num, pow(v, Expr::Const(2.0)))
            }
            Expr::Pow(a, b) => {
                let (u, v) = (a.as_ref().clone(), b.as_ref().clone());
                match (u.varies(seed), v.varies(seed)) {
                    (false, false) => Expr::Const(0.0),
                    (true, false) => {
                        // v * u^(v-1) * u'
                        let reduced = sub(v.clone(), Expr::Const(1.0));
                        mul(mul(v, pow(u, reduced)), a.diff_seeded(seed))
                    }
                    (false, true) => {
                        // u^v * ln(u) * v'
                        mul(mul(self.clone(), call(Func::Log, u)), b.diff_seeded(seed))
                    }
                    (true, true) => {
                        // u^v * (v' ln u + v u' / u)
                        let inner = add(
                            mul(b.diff_seeded(seed), call(Func::Log, u.clone())),
                            div(mul(v, a.diff_seeded(seed)), u),
                        );
                        mul(self.clone(), inner)
                    }
                }
            }
            Expr::Call(f, a) => {
                let du = a.diff_seeded(seed);
                if du.as_const() == Some(0.0) {
                    return Expr::Const(0.0);
                }
                let u = a.as_ref().clone();
                let outer = match f {
                    Func::Sin => call(Func::Cos, u),
                    Func::Cos => neg(call(Func::Sin, u)),
                    Func::Tan => div(Expr::Const(1.0), pow(call(Func::Cos, u), Expr::Const(2.0))),
                    Func::Exp => call(Func::Exp, u),
                    Func::Log => div(Expr::Const(1.0), u),
                    Func::Sqrt => div(Expr::Const(0.5), call(Func::Sqrt, u)),
                    Func::Abs => call(Func::Sign, u),
                    Func::Sign => Expr::Const(0.0),
                };
                mul(outer, du)
            }
        }
    }
}
