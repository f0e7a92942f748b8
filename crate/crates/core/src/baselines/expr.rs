//! Polynomial expressions over normalized surface moments, e.g.
//! `m200*m020 + m200*m002 + m020*m002 - m110^2 - m101^2 - m011^2`.
//!
//! Grammar: sums and differences of products of factors; a factor is a number,
//! a moment `mKLM` (one digit per exponent), a parenthesized expression or a
//! negated factor, optionally raised to a non-negative integer power with `^`.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: moment m{k}{l}{m} has order {} > {max}", k + l + m)]
    OrderTooHigh {
        line: usize,
        k: usize,
        l: usize,
        m: usize,
        max: usize,
    },
    #[error("no invariant expressions given")]
    Empty,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Moment(usize, usize, usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
}

impl Expr {
    pub fn eval(&self, moment: &impl Fn(usize, usize, usize) -> f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Moment(k, l, m) => moment(*k, *l, *m),
            Expr::Neg(a) => -a.eval(moment),
            Expr::Add(a, b) => a.eval(moment) + b.eval(moment),
            Expr::Sub(a, b) => a.eval(moment) - b.eval(moment),
            Expr::Mul(a, b) => a.eval(moment) * b.eval(moment),
            Expr::Pow(a, e) => a.eval(moment).powi(*e as i32),
        }
    }

    fn max_order(&self) -> Option<(usize, usize, usize)> {
        let pick = |a: Option<(usize, usize, usize)>, b: Option<(usize, usize, usize)>| match (a, b) {
            (Some(x), Some(y)) => Some(if x.0 + x.1 + x.2 >= y.0 + y.1 + y.2 { x } else { y }),
            (x, None) => x,
            (None, y) => y,
        };
        match self {
            Expr::Num(_) => None,
            Expr::Moment(k, l, m) => Some((*k, *l, *m)),
            Expr::Neg(a) | Expr::Pow(a, _) => a.max_order(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => pick(a.max_order(), b.max_order()),
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
}

impl Parser<'_> {
    fn err<T>(&self, message: impl Into<String>) -> Result<T, ConfigError> {
        Err(ConfigError::Syntax {
            line: self.line,
            message: format!("{} (at column {})", message.into(), self.pos + 1),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Expr, ConfigError> {
        let mut lhs = self.term()?;
        while let Some(op @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == b'+' {
                Expr::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ConfigError> {
        let mut lhs = self.factor()?;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr, ConfigError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        let base = self.primary()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            let digits = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
            return match digits.parse::<u32>() {
                Ok(e) => Ok(Expr::Pow(Box::new(base), e)),
                Err(_) => self.err("expected a non-negative integer exponent"),
            };
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ConfigError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return self.err("expected ')'");
                }
                self.pos += 1;
                Ok(e)
            }
            Some(b'm') => {
                let digits = self.src.get(self.pos + 1..self.pos + 4);
                match digits {
                    Some(d) if d.iter().all(u8::is_ascii_digit) => {
                        self.pos += 4;
                        if self.src.get(self.pos).is_some_and(u8::is_ascii_alphanumeric) {
                            return self.err("moment names take exactly three digits");
                        }
                        let v = |i: usize| (d[i] - b'0') as usize;
                        Ok(Expr::Moment(v(0), v(1), v(2)))
                    }
                    _ => self.err("moment names look like m200"),
                }
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_digit() || matches!(self.src[self.pos], b'.' | b'e' | b'E'))
                {
                    self.pos += 1;
                }
                let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                match text.parse::<f64>() {
                    Ok(v) => Ok(Expr::Num(v)),
                    Err(_) => self.err(format!("bad number '{text}'")),
                }
            }
            Some(c) => self.err(format!("unexpected '{}'", c as char)),
            None => self.err("unexpected end of expression"),
        }
    }
}

/// Parses one expression; `max_order` bounds the moments it may reference.
pub fn parse_expr(text: &str, line: usize, max_order: usize) -> Result<Expr, ConfigError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0, line };
    let e = p.expr()?;
    if p.peek().is_some() {
        return p.err("trailing input");
    }
    if let Some((k, l, m)) = e.max_order() {
        if k + l + m > max_order {
            return Err(ConfigError::OrderTooHigh { line, k, l, m, max: max_order });
        }
    }
    Ok(e)
}

/// Named expressions, one per line as `name = expr` or a bare `expr`.
/// Blank lines and `#` comments are ignored.
pub fn parse_config(text: &str, max_order: usize) -> Result<Vec<(String, Expr)>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (name, body) = match line.split_once('=') {
            Some((n, b)) => (n.trim().to_string(), b),
            None => (format!("inv{}", out.len()), line),
        };
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(ConfigError::Syntax { line: i + 1, message: format!("bad name '{name}'") });
        }
        out.push((name, parse_expr(body, i + 1, max_order)?));
    }
    if out.is_empty() {
        return Err(ConfigError::Empty);
    }
    Ok(out)
}
