//! Canonical printer.

use super::{fmt_num, Expr, LinComb};
use crate::atoms::AtomId;

pub fn print(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(e, &mut out);
    out
}

fn write_expr(e: &Expr, out: &mut String) {
    match e {
        Expr::Var => out.push('x'),
        Expr::Const(v) => out.push_str(&fmt_num(*v)),
        Expr::Ref(i) => {
            out.push_str("g_");
            out.push_str(&i.to_string());
        }
        Expr::Lin(l) => write_lin(l, out),
        Expr::Apply(atom, args) => write_apply(*atom, args, out),
    }
}

fn write_lin(l: &LinComb, out: &mut String) {
    for (k, (c, child)) in l.terms.iter().enumerate() {
        let t = term(*c, child);
        if k > 0 && !t.starts_with('-') {
            out.push('+');
        }
        out.push_str(&t);
    }
    if l.offset > 0.0 {
        out.push('+');
    }
    if l.offset != 0.0 {
        out.push_str(&fmt_num(l.offset));
    }
}

/// One `c * child` term: `0.5x`, `0.5g_3`, `0.5(...)`, `-x`, `-(...)`.
fn term(c: f64, child: &Expr) -> String {
    let bare = matches!(child, Expr::Var | Expr::Ref(_));
    let inner = print(child);
    if c == 1.0 {
        if bare || matches!(child, Expr::Apply(..)) {
            inner
        } else {
            format!("({inner})")
        }
    } else if c == -1.0 {
        if bare {
            format!("-{inner}")
        } else {
            format!("-({inner})")
        }
    } else if bare {
        format!("{}{inner}", fmt_num(c))
    } else {
        format!("{}({inner})", fmt_num(c))
    }
}

fn write_apply(atom: AtomId, args: &[Expr], out: &mut String) {
    use AtomId::*;
    let u = || print(&args[0]);
    let s = match atom {
        Exp => format!("exp({})", u()),
        ExpNeg => format!("exp({})", term(-1.0, &args[0])),
        Softplus => format!("log(1+exp({}))", u()),
        NegSoftplus => format!("-log(1+exp({}))", u()),
        Hinge => format!("hinge({})", u()),
        Max0 => format!("max(0,{})", u()),
        NegMax0 => format!("-max(0,{})", u()),
        Max | Min => {
            let list: Vec<String> = args.iter().map(print).collect();
            format!("{}({})", atom.name(), list.join(","))
        }
        LogSumExp => {
            let list: Vec<String> = args.iter().map(|a| format!("exp({})", print(a))).collect();
            format!("log({})", list.join("+"))
        }
        Sqrt => format!("sqrt({})", u()),
        NegSqrt => format!("-sqrt({})", u()),
        Log => format!("log({})", u()),
        NegExp => format!("-exp({})", u()),
        Norm1 => format!("||{}||_1", u()),
        Norm2 => format!("||{}||_2", u()),
        NormInf => format!("||{}||_inf", u()),
        SqNorm2 => format!("||{}||_2^2", u()),
        NegNorm1 => format!("-||{}||_1", u()),
        NegNorm2 => format!("-||{}||_2", u()),
        NegNormInf => format!("-||{}||_inf", u()),
        Affine | Sum => unreachable!("linear atoms are LinComb nodes"),
    };
    out.push_str(&s);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(print(&Expr::Var), "x");
        assert_eq!(print(&Expr::affine(-0.342, 1.24)), "-0.342x+1.24");
        let n = Expr::call(AtomId::Norm1, Expr::affine(1.37, 0.0336));
        assert_eq!(print(&n), "||1.37x+0.0336||_1");
    }

    #[test]
    fn coefficient_juxtaposition() {
        let inner = Expr::call(AtomId::NegExp, Expr::Var);
        let e = Expr::lin(vec![(0.534, inner), (-0.263, Expr::Var)], -1.33);
        assert_eq!(print(&e), "0.534(-exp(x))-0.263x-1.33");
        let r = Expr::lin(vec![(0.534, Expr::Ref(3)), (1.0, Expr::Ref(5))], 0.0);
        assert_eq!(print(&r), "0.534g_3+g_5");
    }

    #[test]
    fn negation_forms() {
        assert_eq!(print(&Expr::call(AtomId::ExpNeg, Expr::Var)), "exp(-x)");
        let e = Expr::call(AtomId::ExpNeg, Expr::affine(0.945, 0.5));
        assert_eq!(print(&e), "exp(-(0.945x+0.5))");
        let e = Expr::neg(Expr::call(AtomId::Softplus, Expr::Var));
        assert_eq!(print(&e), "-(log(1+exp(x)))");
        assert_eq!(print(&Expr::call(AtomId::NegSoftplus, Expr::Var)), "-log(1+exp(x))");
    }

    #[test]
    fn variadic_forms() {
        let e = Expr::apply(AtomId::LogSumExp, vec![Expr::Var, Expr::affine(0.3, 0.5)]).unwrap();
        assert_eq!(print(&e), "log(exp(x)+exp(0.3x+0.5))");
        let e = Expr::apply(AtomId::Max, vec![Expr::Var, Expr::affine(2.0, 1.0)]).unwrap();
        assert_eq!(print(&e), "max(x,2x+1)");
        assert_eq!(print(&Expr::call(AtomId::SqNorm2, Expr::Var)), "||x||_2^2");
    }
}
