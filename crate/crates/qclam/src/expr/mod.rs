//! A small complex-expression language for leaf formulas `phi_alpha(z)`.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' exponent)*
//! atom    := number | '(' re ',' im ')' | '(' sum ')' | 'i' | alpha | z | w
//!          | conj '(' sum ')' | exp '(' sum ')'
//! ```
//!
//! Exponents are signed integers. `w` is only meaningful in test-form
//! coefficients; [`Expr::eval`] rejects it.

mod holomorphy;
mod parser;

use std::fmt;

use num_complex::Complex;
use thiserror::Error;

pub use holomorphy::{check_leaf_holomorphy, HolomorphyReport, HOLOMORPHY_TOLERANCE};

type C64 = Complex<f64>;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ExprError {
    #[error("syntax error at offset {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("unknown identifier {name:?} at offset {pos}")]
    UnknownIdentifier { pos: usize, name: String },
    #[error("non-integer exponent at offset {pos}")]
    NonIntegerExponent { pos: usize },
    #[error("division by zero at offset {pos}")]
    DivisionByZero { pos: usize },
    #[error("non-finite value produced at offset {pos}")]
    NonFinite { pos: usize },
    #[error("variable {name} is not bound here")]
    Unbound { name: &'static str },
}

impl ExprError {
    /// Byte offset into the source, if the error has one.
    pub fn position(&self) -> Option<usize> {
        match *self {
            ExprError::Syntax { pos, .. }
            | ExprError::UnknownIdentifier { pos, .. }
            | ExprError::NonIntegerExponent { pos }
            | ExprError::DivisionByZero { pos }
            | ExprError::NonFinite { pos } => Some(pos),
            ExprError::Unbound { .. } => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Var {
    Alpha,
    Z,
    W,
}

impl Var {
    fn name(self) -> &'static str {
        match self {
            Var::Alpha => "alpha",
            Var::Z => "z",
            Var::W => "w",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => " + ",
            BinOp::Sub => " - ",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }
}

/// Expression tree. Binary and power nodes remember the byte offset of their
/// operator so evaluation errors can point at the source; equality ignores
/// those offsets.
#[derive(Clone, Debug)]
pub enum Expr {
    Lit(C64),
    Var(Var),
    Neg(Box<Expr>),
    Conj(Box<Expr>),
    Exp(Box<Expr>),
    Bin { op: BinOp, lhs: Box<Expr>, rhs: Box<Expr>, pos: usize },
    Pow { base: Box<Expr>, exp: i32, pos: usize },
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        use Expr::*;
        match (self, other) {
            // Bitwise so that -0 and 0 stay distinct through a round trip.
            (Lit(a), Lit(b)) => a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits(),
            (Var(a), Var(b)) => a == b,
            (Neg(a), Neg(b)) | (Conj(a), Conj(b)) | (Exp(a), Exp(b)) => a == b,
            (Bin { op: o1, lhs: l1, rhs: r1, .. }, Bin { op: o2, lhs: l2, rhs: r2, .. }) => {
                o1 == o2 && l1 == l2 && r1 == r2
            }
            (Pow { base: b1, exp: e1, .. }, Pow { base: b2, exp: e2, .. }) => e1 == e2 && b1 == b2,
            _ => false,
        }
    }
}

/// Values of the free variables.
#[derive(Clone, Copy, Debug)]
pub struct Bindings {
    pub alpha: C64,
    pub z: C64,
    pub w: Option<C64>,
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr, ExprError> {
        parser::Parser::new(src)?.parse_all()
    }

    /// Evaluates at `(alpha, z)`. Fails if the tree mentions `w`.
    pub fn eval(&self, alpha: C64, z: C64) -> Result<C64, ExprError> {
        self.eval_with(&Bindings { alpha, z, w: None })
    }

    pub fn eval_with(&self, b: &Bindings) -> Result<C64, ExprError> {
        Ok(match self {
            Expr::Lit(c) => *c,
            Expr::Var(Var::Alpha) => b.alpha,
            Expr::Var(Var::Z) => b.z,
            Expr::Var(Var::W) => b.w.ok_or(ExprError::Unbound { name: "w" })?,
            Expr::Neg(e) => -e.eval_with(b)?,
            Expr::Conj(e) => e.eval_with(b)?.conj(),
            Expr::Exp(e) => {
                let v = e.eval_with(b)?.exp();
                if !(v.re.is_finite() && v.im.is_finite()) {
                    return Err(ExprError::NonFinite { pos: self.first_pos() });
                }
                v
            }
            Expr::Bin { op, lhs, rhs, pos } => {
                let (l, r) = (lhs.eval_with(b)?, rhs.eval_with(b)?);
                let v = match op {
                    BinOp::Add => l + r,
                    BinOp::Sub => l - r,
                    BinOp::Mul => l * r,
                    BinOp::Div => {
                        if r.re == 0.0 && r.im == 0.0 {
                            return Err(ExprError::DivisionByZero { pos: *pos });
                        }
                        l / r
                    }
                };
                if !(v.re.is_finite() && v.im.is_finite()) {
                    return Err(ExprError::NonFinite { pos: *pos });
                }
                v
            }
            Expr::Pow { base, exp, pos } => {
                let x = base.eval_with(b)?;
                if *exp < 0 && x.re == 0.0 && x.im == 0.0 {
                    return Err(ExprError::DivisionByZero { pos: *pos });
                }
                let v = x.powi(*exp);
                if !(v.re.is_finite() && v.im.is_finite()) {
                    return Err(ExprError::NonFinite { pos: *pos });
                }
                v
            }
        })
    }

    fn first_pos(&self) -> usize {
        match self {
            Expr::Bin { pos, .. } | Expr::Pow { pos, .. } => *pos,
            Expr::Neg(e) | Expr::Conj(e) | Expr::Exp(e) => e.first_pos(),
            _ => 0,
        }
    }

    /// Source offsets of every node that can divide by zero: explicit
    /// divisions and negative powers.
    pub fn singular_nodes(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.visit(&mut |e| match e {
            Expr::Bin { op: BinOp::Div, pos, .. } => out.push(*pos),
            Expr::Pow { exp, pos, .. } if *exp < 0 => out.push(*pos),
            _ => {}
        });
        out
    }

    pub fn mentions(&self, var: Var) -> bool {
        let mut found = false;
        self.visit(&mut |e| found |= matches!(e, Expr::Var(v) if *v == var));
        found
    }

    fn visit(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Neg(e) | Expr::Conj(e) | Expr::Exp(e) => e.visit(f),
            Expr::Bin { lhs, rhs, .. } => {
                lhs.visit(f);
                rhs.visit(f);
            }
            Expr::Pow { base, .. } => base.visit(f),
            Expr::Lit(_) | Expr::Var(_) => {}
        }
    }

    /// Replaces `z` by `scale * z`; used to pull a motion back from `D(0, r)`
    /// to the unit disk.
    pub fn scale_z(&self, scale: f64) -> Expr {
        self.substitute(Var::Z, &Expr::Bin {
            op: BinOp::Mul,
            lhs: Box::new(Expr::Lit(Complex::new(scale, 0.0))),
            rhs: Box::new(Expr::Var(Var::Z)),
            pos: 0,
        })
    }

    pub fn substitute(&self, var: Var, with: &Expr) -> Expr {
        let sub = |e: &Expr| Box::new(e.substitute(var, with));
        match self {
            Expr::Var(v) if *v == var => with.clone(),
            Expr::Lit(_) | Expr::Var(_) => self.clone(),
            Expr::Neg(e) => Expr::Neg(sub(e)),
            Expr::Conj(e) => Expr::Conj(sub(e)),
            Expr::Exp(e) => Expr::Exp(sub(e)),
            Expr::Bin { op, lhs, rhs, pos } => Expr::Bin { op: *op, lhs: sub(lhs), rhs: sub(rhs), pos: *pos },
            Expr::Pow { base, exp, pos } => Expr::Pow { base: sub(base), exp: *exp, pos: *pos },
        }
    }

    // Binding strength used by the printer: 1 sums, 2 products, 3 negation,
    // 4 powers, 5 atoms.
    fn strength(&self) -> u8 {
        match self {
            Expr::Bin { op, .. } => op.precedence(),
            Expr::Neg(_) => 3,
            Expr::Pow { .. } => 4,
            Expr::Lit(c) if !plain_literal(*c) => 5,
            _ => 5,
        }
    }

    fn write(&self, f: &mut fmt::Formatter<'_>, min: u8, right: bool) -> fmt::Result {
        let s = self.strength();
        let paren = s < min || (right && s == min && s <= 2);
        if paren {
            f.write_str("(")?;
        }
        match self {
            Expr::Lit(c) if plain_literal(*c) => write!(f, "{}", c.re)?,
            Expr::Lit(c) => write!(f, "({},{})", c.re, c.im)?,
            Expr::Var(v) => f.write_str(v.name())?,
            Expr::Neg(e) => {
                f.write_str("-")?;
                e.write(f, 3, false)?;
            }
            Expr::Conj(e) => {
                f.write_str("conj(")?;
                e.write(f, 0, false)?;
                f.write_str(")")?;
            }
            Expr::Exp(e) => {
                f.write_str("exp(")?;
                e.write(f, 0, false)?;
                f.write_str(")")?;
            }
            Expr::Bin { op, lhs, rhs, .. } => {
                lhs.write(f, s, false)?;
                f.write_str(op.symbol())?;
                rhs.write(f, s, true)?;
            }
            Expr::Pow { base, exp, .. } => {
                base.write(f, 4, false)?;
                if *exp < 0 {
                    write!(f, "^({exp})")?;
                } else {
                    write!(f, "^{exp}")?;
                }
            }
        }
        if paren {
            f.write_str(")")?;
        }
        Ok(())
    }
}

// Literals that print as a bare nonnegative real number.
fn plain_literal(c: C64) -> bool {
    c.im.to_bits() == 0 && c.re.is_sign_positive()
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(f, 0, false)
    }
}

impl std::str::FromStr for Expr {
    type Err = ExprError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expr::parse(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(src: &str, alpha: C64, z: C64) -> C64 {
        Expr::parse(src).unwrap().eval(alpha, z).unwrap()
    }

    const ZERO: C64 = C64::new(0.0, 0.0);

    #[test]
    fn shear_family_value() {
        let v = ev("alpha + z*conj(alpha)", C64::new(0.3, 0.0), C64::new(0.0, 0.5));
        assert!((v - C64::new(0.3, 0.15)).norm() < 1e-15);
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("1+2*3", ZERO, ZERO), C64::new(7.0, 0.0));
        assert_eq!(ev("8-4-2", ZERO, ZERO), C64::new(2.0, 0.0));
        assert_eq!(ev("8/4/2", ZERO, ZERO), C64::new(1.0, 0.0));
        assert_eq!(ev("-2^2", ZERO, ZERO), C64::new(-4.0, 0.0));
        assert_eq!(ev("2^3^2", ZERO, ZERO), C64::new(64.0, 0.0));
        assert_eq!(ev("2^-1", ZERO, ZERO), C64::new(0.5, 0.0));
    }

    #[test]
    fn unbalanced_paren_position() {
        let err = Expr::parse("alpha + (z").unwrap_err();
        assert_eq!(err.position(), Some(10), "{err}");
    }

    #[test]
    fn other_parse_errors() {
        assert!(matches!(Expr::parse("zeta"), Err(ExprError::UnknownIdentifier { pos: 0, .. })));
        assert!(matches!(Expr::parse("z^2.5"), Err(ExprError::NonIntegerExponent { pos: 2 })));
        assert!(matches!(Expr::parse("z^alpha"), Err(ExprError::NonIntegerExponent { .. })));
        assert!(matches!(Expr::parse(""), Err(ExprError::Syntax { .. })));
        assert!(matches!(Expr::parse("(1+z, 2)"), Err(ExprError::Syntax { .. })));
        assert!(matches!(Expr::parse("z $"), Err(ExprError::Syntax { pos: 2, .. })));
    }

    #[test]
    fn eval_examples() {
        let i = C64::new(0.0, 1.0);
        assert!((ev("z^2", ZERO, C64::new(1.0, 1.0)) - 2.0 * i).norm() < 1e-15);
        assert_eq!(ev("conj(z)", ZERO, i), -i);
        assert_eq!(ev("(1.5,-2)", ZERO, ZERO), C64::new(1.5, -2.0));
        assert_eq!(ev("i*i", ZERO, ZERO), C64::new(-1.0, 0.0));
        let err = Expr::parse("1/(z-1)").unwrap().eval(ZERO, C64::new(1.0, 0.0)).unwrap_err();
        assert_eq!(err, ExprError::DivisionByZero { pos: 1 });
    }

    #[test]
    fn w_requires_binding() {
        let e = Expr::parse("w*z").unwrap();
        assert!(matches!(e.eval(ZERO, ZERO), Err(ExprError::Unbound { .. })));
        let b = Bindings { alpha: ZERO, z: C64::new(2.0, 0.0), w: Some(C64::new(3.0, 0.0)) };
        assert_eq!(e.eval_with(&b).unwrap(), C64::new(6.0, 0.0));
    }

    #[test]
    fn printing_round_trips() {
        for src in [
            "alpha + z*conj(alpha)",
            "alpha*(1 + z/2)",
            "alpha + z*exp(z)*conj(alpha)/4",
            "-(-z)^2 - (a)".replace("(a)", "(1 - z)").as_str(),
            "1 - (2 - 3)",
            "1/(2/z)",
            "(-0.0,0) + (1,-2)*z^(-3)",
            "--z",
            "(z^2)^3",
            "-(z + 1)",
            "exp(-(alpha))^2",
        ] {
            let e = Expr::parse(src).unwrap();
            let printed = e.to_string();
            assert_eq!(Expr::parse(&printed).unwrap(), e, "{src} -> {printed}");
        }
    }

    #[test]
    fn division_nodes_are_listed() {
        let e = Expr::parse("1/z + z^(-2) + z^2").unwrap();
        assert_eq!(e.singular_nodes(), vec![1, 7]);
    }

    #[test]
    fn scale_z_substitutes() {
        let e = Expr::parse("alpha + z*conj(alpha)").unwrap().scale_z(0.1);
        let v = e.eval(C64::new(1.0, 0.0), C64::new(1.0, 0.0)).unwrap();
        assert!((v - C64::new(1.1, 0.0)).norm() < 1e-15);
    }
}
