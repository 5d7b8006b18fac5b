use std::fmt::{self, Write};

use num_traits::{One, Signed};

use super::{Formula, Term};

const SUM: u8 = 0;
const PRODUCT: u8 = 1;
const UNARY: u8 = 2;
const POWER: u8 = 3;
const BASE: u8 = 4;

fn is_minus_one(t: &Term) -> bool {
    matches!(t, Term::Int(v) if v.is_negative() && v.abs().is_one())
}

fn folds_under_minus(t: &Term) -> bool {
    if matches!(t, Term::Int(_)) {
        return true;
    }
    let mut s = String::new();
    write_term(&mut s, t, POWER);
    s.starts_with(|c: char| c.is_ascii_digit())
}

fn write_term(out: &mut String, t: &Term, level: u8) {
    let wrap = |out: &mut String, needed: bool, body: &dyn Fn(&mut String)| {
        if needed {
            out.push('(');
            body(out);
            out.push(')');
        } else {
            body(out);
        }
    };
    match t {
        Term::Var(v) => out.push_str(v),
        Term::Int(v) => wrap(out, v.is_negative() && level >= POWER, &|o| {
            let _ = write!(o, "{v}");
        }),
        Term::Add(a, b) => wrap(out, level > SUM, &|o| {
            write_term(o, a, SUM);
            match b.as_ref() {
                Term::Int(v) if v.is_negative() => {
                    let _ = write!(o, " - {}", v.abs());
                }
                Term::Mul(m, x) if is_minus_one(m) && !folds_under_minus(x) => {
                    o.push_str(" - ");
                    write_term(o, x, PRODUCT);
                }
                _ => {
                    o.push_str(" + ");
                    write_term(o, b, PRODUCT);
                }
            }
        }),
        Term::Mul(a, b) if is_minus_one(a) && !folds_under_minus(b) => wrap(out, level > UNARY, &|o| {
            o.push('-');
            write_term(o, b, POWER);
        }),
        Term::Mul(a, b) => wrap(out, level > PRODUCT, &|o| {
            write_term(o, a, PRODUCT);
            o.push('*');
            write_term(o, b, UNARY);
        }),
        Term::Pow(a, e) => wrap(out, level > POWER, &|o| {
            write_term(o, a, BASE);
            let _ = write!(o, "^{e}");
        }),
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_term(&mut s, self, SUM);
        f.write_str(&s)
    }
}

const QUANT: u8 = 0;
const IMPLIES: u8 = 1;
const OR: u8 = 2;
const AND: u8 = 3;
const NOT: u8 = 4;

fn write_formula(out: &mut String, f: &Formula, ctx: u8) {
    let open = |out: &mut String, own: u8| {
        let p = ctx > own;
        if p {
            out.push('(');
        }
        p
    };
    let close = |out: &mut String, p: bool| {
        if p {
            out.push(')');
        }
    };
    match f {
        Formula::Eq(a, b) => {
            let _ = write!(out, "{a} = {b}");
        }
        Formula::Neq(a, b) => {
            let _ = write!(out, "{a} != {b}");
        }
        Formula::Div(a, b) => {
            let _ = write!(out, "div({a}, {b})");
        }
        Formula::NotDiv(a, b) => {
            let _ = write!(out, "!div({a}, {b})");
        }
        Formula::And(cs) if cs.is_empty() => out.push_str("0 = 0"),
        Formula::Or(cs) if cs.is_empty() => out.push_str("1 = 0"),
        Formula::And(cs) | Formula::Or(cs) => {
            let (own, sep) = if matches!(f, Formula::And(_)) { (AND, " & ") } else { (OR, " | ") };
            let p = open(out, own);
            for (i, c) in cs.iter().enumerate() {
                if i > 0 {
                    out.push_str(sep);
                }
                write_formula(out, c, own + 1);
            }
            close(out, p);
        }
        Formula::Not(a) => {
            out.push('!');
            if a.is_atom() {
                out.push('(');
                write_formula(out, a, QUANT);
                out.push(')');
            } else {
                write_formula(out, a, NOT);
            }
        }
        Formula::Implies(a, b) => {
            let p = open(out, IMPLIES);
            write_formula(out, a, OR);
            out.push_str(" -> ");
            write_formula(out, b, IMPLIES);
            close(out, p);
        }
        Formula::Forall(..) | Formula::Exists(..) => {
            let p = open(out, QUANT);
            let mut cur = f;
            while let Some((q, v, body)) = cur.as_quantifier() {
                let _ = write!(out, "{q} {v}");
                let mut inner = body;
                while let Some((q2, v2, b2)) = inner.as_quantifier() {
                    if q2 != q {
                        break;
                    }
                    let _ = write!(out, " {v2}");
                    inner = b2;
                }
                out.push_str(". ");
                cur = inner;
            }
            write_formula(out, cur, QUANT);
            close(out, p);
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_formula(&mut s, self, QUANT);
        f.write_str(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::super::{parse_formula, Signature};

    fn round_trip(s: &str, sig: Signature) -> String {
        let f = parse_formula(s, sig).unwrap();
        let printed = f.to_string();
        let g = parse_formula(&printed, sig).unwrap();
        assert_eq!(f, g, "{s} printed as {printed}");
        printed
    }

    #[test]
    fn prints_canonically() {
        let r = Signature::Ring;
        assert_eq!(round_trip("forall A. exists X. (X^2 - A = 0)", r), "forall A. exists X. X^2 - A = 0");
        assert_eq!(round_trip("forall a b. a=b", r), "forall a b. a = b");
        assert_eq!(round_trip("-x^2 + -3*y - (a - b) = (-2)^3", r), "-x^2 + -3*y - (a - b) = (-2)^3");
        assert_eq!(round_trip("x*(y*z) = (x*y)*z", r), "x*(y*z) = x*y*z");
        assert_eq!(round_trip("(a = 0 & b = 0) & c = 0", r), "(a = 0 & b = 0) & c = 0");
        assert_eq!(round_trip("(a = 0 -> b = 0) -> c = 0", r), "(a = 0 -> b = 0) -> c = 0");
        assert_eq!(round_trip("!(x = 0) | (exists y. x = y) & z = 1", r), "!(x = 0) | (exists y. x = y) & z = 1");
        assert_eq!(round_trip("- - x = a - -b", r), "-(-x) = a - -b");
        assert_eq!(round_trip("3 | x & !div(x, 4)", Signature::Divisibility), "div(3, x) & !(div(x, 4))");
    }
}
