use super::Expr;
use crate::atoms::AtomId;

/// `f(x)`, or `None` when any intermediate value is non-finite or leaves an
/// atom's domain. References to sub-functions evaluate to `None`.
pub fn evaluate(e: &Expr, x: f64) -> Option<f64> {
    let v = match e {
        Expr::Var => x,
        Expr::Const(c) => *c,
        Expr::Ref(_) => return None,
        Expr::Lin(l) => {
            let mut s = l.offset;
            for (c, child) in &l.terms {
                s += c * evaluate(child, x)?;
            }
            s
        }
        Expr::Apply(atom, args) => match atom {
            AtomId::Max | AtomId::Min | AtomId::LogSumExp => {
                let vals = args.iter().map(|a| evaluate(a, x)).collect::<Option<Vec<f64>>>()?;
                atom.apply(&vals)
            }
            _ => atom.apply(&[evaluate(&args[0], x)?]),
        },
    };
    v.is_finite().then_some(v)
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(evaluate(&Expr::Var, 3.7), Some(3.7));
        assert_eq!(evaluate(&parse("-0.342x+1.24").unwrap(), 0.0), Some(1.24));
        assert_eq!(evaluate(&parse("exp(exp(x))").unwrap(), 10.0), None);
        assert_eq!(evaluate(&parse("log(x)").unwrap(), -1.0), None);
        assert_eq!(evaluate(&parse("sqrt(x-1)").unwrap(), 0.0), None);
    }

    #[test]
    fn stable_softplus_and_lse() {
        let sp = parse("log(1+exp(x))").unwrap();
        assert_eq!(evaluate(&sp, 800.0), Some(800.0));
        assert!(evaluate(&sp, -800.0).unwrap() >= 0.0);
        let lse = parse("log(exp(x)+exp(-x))").unwrap();
        let v = evaluate(&lse, 700.0).unwrap();
        assert!((v - 700.0).abs() < 1e-12);
    }

    #[test]
    fn exp_chain_overflow_point() {
        // e^(e^x) exceeds f64::MAX once e^x > ln(f64::MAX) ~ 709.78
        let e = parse("exp(exp(x))").unwrap();
        let edge = f64::MAX.ln().ln();
        assert!(evaluate(&e, edge - 1e-6).is_some());
        assert!(evaluate(&e, edge + 1e-6).is_none());
    }
}
