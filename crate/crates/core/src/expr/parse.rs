use std::sync::Arc;

use super::{Expr, ExprError, Func};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(src: &'a str) -> Result<Vec<(Tok, usize)>, ExprError> {
        let mut lx = Lexer { src, pos: 0 };
        let mut out = Vec::new();
        loop {
            let (tok, at) = lx.next()?;
            let end = tok == Tok::End;
            out.push((tok, at));
            if end {
                return Ok(out);
            }
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn next(&mut self) -> Result<(Tok, usize), ExprError> {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.pos += self.peek().map_or(0, char::len_utf8);
        }
        let start = self.pos;
        let Some(c) = self.peek() else {
            return Ok((Tok::End, start));
        };
        if c.is_ascii_digit() || c == '.' {
            return self.number(start);
        }
        if c.is_alphabetic() || c == '_' {
            while matches!(self.peek(), Some(c) if c.is_alphanumeric() || c == '_') {
                self.pos += self.peek().map_or(0, char::len_utf8);
            }
            return Ok((Tok::Ident(self.src[start..self.pos].to_string()), start));
        }
        self.pos += c.len_utf8();
        let tok = match c {
            '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            other => {
                return Err(ExprError::Syntax {
                    pos: start,
                    message: format!("unexpected character '{other}'"),
                })
            }
        };
        Ok((tok, start))
    }

    fn number(&mut self, start: usize) -> Result<(Tok, usize), ExprError> {
        let bytes = self.src.as_bytes();
        let mut i = self.pos;
        while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
            i += 1;
        }
        if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
            let mut j = i + 1;
            if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                j += 1;
            }
            if j < bytes.len() && bytes[j].is_ascii_digit() {
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                i = j;
            }
        }
        self.pos = i;
        let text = &self.src[start..i];
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok((Tok::Num(v), start)),
            _ => Err(ExprError::Syntax {
                pos: start,
                message: format!("malformed number '{text}'"),
            }),
        }
    }
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    idx: usize,
    vars: &'a [&'a str],
}

// Binding powers: (left, right). `^` is right-associative; unary minus binds
// looser than `^` so that -x^2 = -(x^2).
const ADD_BP: (u8, u8) = (10, 11);
const MUL_BP: (u8, u8) = (20, 21);
const POW_BP: (u8, u8) = (40, 39);
const PREFIX_BP: u8 = 30;

impl Parser<'_> {
    fn peek(&self) -> &(Tok, usize) {
        &self.toks[self.idx]
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.idx].clone();
        if self.idx + 1 < self.toks.len() {
            self.idx += 1;
        }
        t
    }

    fn unexpected(tok: &Tok, pos: usize) -> ExprError {
        let message = match tok {
            Tok::End => "unexpected end of input".to_string(),
            Tok::Num(v) => format!("unexpected number {v}"),
            Tok::Ident(s) => format!("unexpected identifier '{s}'"),
            Tok::Op(c) => format!("unexpected '{c}'"),
            Tok::LParen => "unexpected '('".to_string(),
            Tok::RParen => "unexpected ')'".to_string(),
        };
        ExprError::Syntax { pos, message }
    }

    fn expr(&mut self, min_bp: u8) -> Result<Expr, ExprError> {
        let mut lhs = self.prefix()?;
        loop {
            let (tok, _) = self.peek().clone();
            let (op, (lbp, rbp)) = match tok {
                Tok::Op(c @ ('+' | '-')) => (c, ADD_BP),
                Tok::Op(c @ ('*' | '/')) => (c, MUL_BP),
                Tok::Op('^') => ('^', POW_BP),
                _ => break,
            };
            if lbp < min_bp {
                break;
            }
            self.bump();
            let rhs = Arc::new(self.expr(rbp)?);
            let l = Arc::new(lhs);
            lhs = match op {
                '+' => Expr::Add(l, rhs),
                '-' => Expr::Sub(l, rhs),
                '*' => Expr::Mul(l, rhs),
                '/' => Expr::Div(l, rhs),
                _ => Expr::Pow(l, rhs),
            };
        }
        Ok(lhs)
    }

    fn prefix(&mut self) -> Result<Expr, ExprError> {
        let (tok, pos) = self.bump();
        match tok {
            Tok::Num(v) => Ok(Expr::Const(v)),
            Tok::Op('-') => match self.expr(PREFIX_BP)? {
                Expr::Const(c) => Ok(Expr::Const(-c)),
                other => Ok(Expr::Neg(Arc::new(other))),
            },
            Tok::Op('+') => self.expr(PREFIX_BP),
            Tok::LParen => {
                let inner = self.expr(0)?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Tok::Ident(name) => self.ident(name, pos),
            other => Err(Self::unexpected(&other, pos)),
        }
    }

    fn ident(&mut self, name: String, pos: usize) -> Result<Expr, ExprError> {
        let is_call = matches!(self.peek().0, Tok::LParen);
        if is_call {
            let Some(func) = Func::from_name(&name) else {
                return Err(ExprError::UnknownFunction { name, pos });
            };
            self.bump();
            let arg = self.expr(0)?;
            self.expect_rparen()?;
            return Ok(Expr::Call(func, Arc::new(arg)));
        }
        if self.vars.contains(&name.as_str()) {
            return Ok(Expr::Var(Arc::from(name.as_str())));
        }
        match name.as_str() {
            "pi" => Ok(Expr::Const(std::f64::consts::PI)),
            "e" => Ok(Expr::Const(std::f64::consts::E)),
            _ if Func::from_name(&name).is_some() => Err(ExprError::Syntax {
                pos: pos + name.len(),
                message: format!("expected '(' after function '{name}'"),
            }),
            _ => Err(ExprError::UnknownIdentifier { name, pos }),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ExprError> {
        match self.bump() {
            (Tok::RParen, _) => Ok(()),
            (_, pos) => Err(ExprError::Syntax {
                pos,
                message: "expected ')'".into(),
            }),
        }
    }
}

/// Parses infix text into an expression over `allowed_vars`.
///
/// Declared variables shadow the constants `pi` and `e`.
pub fn parse(text: &str, allowed_vars: &[&str]) -> Result<Expr, ExprError> {
    if text.trim().is_empty() {
        return Err(ExprError::Syntax {
            pos: 0,
            message: "empty expression".into(),
        });
    }
    let toks = Lexer::tokens(text)?;
    let mut p = Parser {
        toks,
        idx: 0,
        vars: allowed_vars,
    };
    let e = p.expr(0)?;
    match p.peek().clone() {
        (Tok::End, _) => Ok(e),
        (tok, pos) => Err(Parser::unexpected(&tok, pos)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const XY: &[&str] = &["x", "y"];

    #[test]
    fn root_of_sum() {
        let e = parse("x^2 + sin(y)", XY).unwrap();
        assert!(matches!(e, Expr::Add(..)));
    }

    #[test]
    fn syntax_error_points_at_operator() {
        let err = parse("x + * y", XY).unwrap_err();
        assert_eq!(
            err,
            ExprError::Syntax {
                pos: 4,
                message: "unexpected '*'".into()
            }
        );
    }

    #[test]
    fn undeclared_variable() {
        let err = parse("sin(z)", XY).unwrap_err();
        assert_eq!(
            err,
            ExprError::UnknownIdentifier {
                name: "z".into(),
                pos: 4
            }
        );
    }

    #[test]
    fn unknown_function() {
        assert!(matches!(
            parse("foo(x)", XY),
            Err(ExprError::UnknownFunction { .. })
        ));
    }

    #[test]
    fn precedence_and_associativity() {
        let v = |s: &str| parse(s, XY).unwrap().eval_xy(2.0, 3.0).unwrap();
        assert_eq!(v("2^3^2"), 512.0);
        assert_eq!(v("-x^2"), -4.0);
        assert_eq!(v("x - y - 1"), -2.0);
        assert_eq!(v("x / y * 3"), 2.0);
        assert_eq!(v("1 + 2 * 3"), 7.0);
        assert_eq!(v("  x*y  "), 6.0);
        assert_eq!(v("2.5e1 + 1E-1"), 25.1);
    }

    #[test]
    fn unbalanced_and_trailing() {
        assert!(matches!(parse("(x + y", XY), Err(ExprError::Syntax { .. })));
        assert!(matches!(parse("x y", XY), Err(ExprError::Syntax { pos: 2, .. })));
        assert!(matches!(parse("", XY), Err(ExprError::Syntax { .. })));
        assert!(matches!(parse("sin + 1", XY), Err(ExprError::Syntax { .. })));
        assert!(matches!(parse("x # 1", XY), Err(ExprError::Syntax { pos: 2, .. })));
    }
}
