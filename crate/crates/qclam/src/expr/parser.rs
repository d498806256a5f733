use num_complex::Complex;

use super::{BinOp, Expr, ExprError, Var};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    LParen,
    RParen,
    Comma,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn next_token(&mut self) -> Result<(Tok, usize), ExprError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(&b) = bytes.get(self.pos) else {
            return Ok((Tok::End, start));
        };
        let single = match b {
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b',' => Some(Tok::Comma),
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            _ => None,
        };
        if let Some(t) = single {
            self.pos += 1;
            return Ok((t, start));
        }
        if b.is_ascii_digit() || b == b'.' {
            let mut end = start;
            while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
                end += 1;
            }
            if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
                let mut k = end + 1;
                if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                    k += 1;
                }
                if k < bytes.len() && bytes[k].is_ascii_digit() {
                    while k < bytes.len() && bytes[k].is_ascii_digit() {
                        k += 1;
                    }
                    end = k;
                }
            }
            let text = &self.src[start..end];
            let v: f64 = text
                .parse()
                .map_err(|_| ExprError::Syntax { pos: start, message: format!("malformed number {text:?}") })?;
            if !v.is_finite() {
                return Err(ExprError::Syntax { pos: start, message: format!("number {text:?} overflows") });
            }
            self.pos = end;
            return Ok((Tok::Num(v), start));
        }
        if b.is_ascii_alphabetic() || b == b'_' {
            let mut end = start;
            while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_') {
                end += 1;
            }
            self.pos = end;
            return Ok((Tok::Ident(self.src[start..end].to_string()), start));
        }
        let ch = self.src[start..].chars().next().unwrap_or('?');
        Err(ExprError::Syntax { pos: start, message: format!("unexpected character {ch:?}") })
    }
}

pub(super) struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    pos: usize,
}

impl<'a> Parser<'a> {
    pub(super) fn new(src: &'a str) -> Result<Self, ExprError> {
        let mut lexer = Lexer { src, pos: 0 };
        let (tok, pos) = lexer.next_token()?;
        Ok(Self { lexer, tok, pos })
    }

    fn bump(&mut self) -> Result<(), ExprError> {
        let (tok, pos) = self.lexer.next_token()?;
        self.tok = tok;
        self.pos = pos;
        Ok(())
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ExprError> {
        if self.tok == want {
            self.bump()
        } else {
            Err(self.unexpected(what))
        }
    }

    fn unexpected(&self, what: &str) -> ExprError {
        let found = match &self.tok {
            Tok::End => "end of input".to_string(),
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier {s:?}"),
            t => format!("{t:?}"),
        };
        ExprError::Syntax { pos: self.pos, message: format!("expected {what}, found {found}") }
    }

    pub(super) fn parse_all(&mut self) -> Result<Expr, ExprError> {
        if self.tok == Tok::End {
            return Err(ExprError::Syntax { pos: 0, message: "empty expression".into() });
        }
        let e = self.sum()?;
        if self.tok != Tok::End {
            return Err(self.unexpected("operator or end of input"));
        }
        Ok(e)
    }

    fn sum(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            let pos = self.pos;
            self.bump()?;
            let rhs = self.product()?;
            lhs = Expr::Bin { op, lhs: Box::new(lhs), rhs: Box::new(rhs), pos };
        }
    }

    fn product(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.tok {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            let pos = self.pos;
            self.bump()?;
            let rhs = self.unary()?;
            lhs = Expr::Bin { op, lhs: Box::new(lhs), rhs: Box::new(rhs), pos };
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.tok == Tok::Minus {
            self.bump()?;
            let inner = self.unary()?;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let mut base = self.atom()?;
        while self.tok == Tok::Caret {
            let pos = self.pos;
            self.bump()?;
            let exp = self.exponent()?;
            base = Expr::Pow { base: Box::new(base), exp, pos };
        }
        Ok(base)
    }

    /// `INT`, `-INT`, or either in parentheses.
    fn exponent(&mut self) -> Result<i32, ExprError> {
        let start = self.pos;
        let paren = self.tok == Tok::LParen;
        if paren {
            self.bump()?;
        }
        let neg = self.tok == Tok::Minus;
        if neg {
            self.bump()?;
        }
        let v = match self.tok {
            Tok::Num(v) if v.fract() == 0.0 && v.abs() <= i32::MAX as f64 => v as i32,
            Tok::Num(_) | Tok::Ident(_) | Tok::LParen => return Err(ExprError::NonIntegerExponent { pos: start }),
            _ => return Err(self.unexpected("integer exponent")),
        };
        self.bump()?;
        if paren {
            if self.tok != Tok::RParen {
                return Err(ExprError::NonIntegerExponent { pos: start });
            }
            self.bump()?;
        }
        Ok(if neg { -v } else { v })
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        match self.tok.clone() {
            Tok::Num(v) => {
                self.bump()?;
                Ok(Expr::Lit(Complex::new(v, 0.0)))
            }
            Tok::Ident(name) => {
                let pos = self.pos;
                self.bump()?;
                match name.as_str() {
                    "alpha" => Ok(Expr::Var(Var::Alpha)),
                    "z" => Ok(Expr::Var(Var::Z)),
                    "w" => Ok(Expr::Var(Var::W)),
                    "i" => Ok(Expr::Lit(Complex::new(0.0, 1.0))),
                    "conj" | "exp" => {
                        self.expect(Tok::LParen, "'(' after function name")?;
                        let arg = self.sum()?;
                        self.expect(Tok::RParen, "')'")?;
                        Ok(if name == "conj" { Expr::Conj(Box::new(arg)) } else { Expr::Exp(Box::new(arg)) })
                    }
                    _ => Err(ExprError::UnknownIdentifier { pos, name }),
                }
            }
            Tok::LParen => {
                self.bump()?;
                let inner = self.sum()?;
                if self.tok == Tok::Comma {
                    let re = real_literal(&inner).ok_or_else(|| ExprError::Syntax {
                        pos: self.pos,
                        message: "complex literal parts must be real numbers".into(),
                    })?;
                    self.bump()?;
                    let neg = self.tok == Tok::Minus;
                    if neg {
                        self.bump()?;
                    }
                    let im = match self.tok {
                        Tok::Num(v) => v,
                        _ => return Err(self.unexpected("imaginary part")),
                    };
                    self.bump()?;
                    self.expect(Tok::RParen, "')'")?;
                    return Ok(Expr::Lit(Complex::new(re, if neg { -im } else { im })));
                }
                self.expect(Tok::RParen, "')'")?;
                Ok(inner)
            }
            _ => Err(self.unexpected("operand")),
        }
    }
}

/// A plain real number, possibly negated, as it may appear before the comma
/// of a complex literal.
fn real_literal(e: &Expr) -> Option<f64> {
    match e {
        Expr::Lit(c) if c.im == 0.0 => Some(c.re),
        Expr::Neg(inner) => match inner.as_ref() {
            Expr::Lit(c) if c.im == 0.0 => Some(-c.re),
            _ => None,
        },
        _ => None,
    }
}
