use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use edslab::arith::{FactorCache, Factorization};
use edslab::curve::{self, Curve, Point};
use edslab::eds::{self, EdsSequence, ScanOptions, Which};
use edslab::formula::{
    builtin_formula, parse_formula, shape_and_classify, to_positive_prenex, Formula, PrenexShape, Ring, Signature,
};
use edslab::periodicity::{self, HeuristicParams, ResidueClassSet};
use edslab::translate::{self as tr, ModelSpec, Table};
use edslab::PrimeSet;
use num_bigint::BigInt;
use num_traits::Zero;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::presets::{self, Preset};
use crate::{
    CheckArgs, CliError, CurveArgs, DensityArgs, DividesArgs, FormulaArgs, FormulaSource, Global, HeuristicArgs, K3Args,
    Output, PrimeSetArgs, PrimesArg, RingArg, ScanArgs, TableArg, TableArgs, TranslateArgs, WardArgs,
};

pub struct Context {
    preset: Preset,
    cache: FactorCache,
    cache_path: Option<PathBuf>,
}

impl Context {
    pub fn new(g: &Global) -> Result<Self, CliError> {
        let preset = match &g.preset {
            Some(name) => presets::resolve(name, g.config.as_deref())?,
            None => Preset::default(),
        };
        let cache = FactorCache::new(g.seed);
        if let Some(path) = &g.cache {
            cache.load(path)?;
        }
        Ok(Context { preset, cache, cache_path: g.cache.clone() })
    }

    pub fn finish(&self) -> Result<(), CliError> {
        if let Some(path) = &self.cache_path {
            self.cache.save(path)?;
        }
        Ok(())
    }

    fn curve_and_point(&self, args: &CurveArgs) -> Result<(Curve, Point), CliError> {
        let curve = args.curve.as_ref().or(self.preset.curve.as_ref());
        let point = args.point.as_ref().or(self.preset.point.as_ref());
        let (Some(c), Some(p)) = (curve, point) else {
            return Err(CliError::Usage("--curve and --point (or --preset) are required".into()));
        };
        let e = Curve::parse(c)?;
        let p = Point::parse(p)?;
        e.check(&p)?;
        Ok((e, p))
    }

    fn prime_set(&self, args: &PrimeSetArgs) -> Result<PrimeSet, CliError> {
        match args.primes {
            PrimesArg::All => Ok(PrimeSet::AllPrimes),
            PrimesArg::Inert => {
                let text = args.discriminants.as_ref().or(self.preset.discriminants.as_ref()).ok_or_else(|| {
                    CliError::Usage("--primes inert needs --discriminants (or a preset with them)".into())
                })?;
                let ds = text
                    .split(',')
                    .map(|d| d.trim().parse::<BigInt>().map_err(|_| CliError::Usage(format!("bad discriminant '{d}'"))))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(PrimeSet::inert_in(ds)?)
            }
        }
    }
}

fn single(text: String, json: Value) -> Output {
    Output { text, json: vec![json] }
}

/// Left-aligned columns separated by two spaces.
fn aligned(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> =
        (0..cols).map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for r in rows {
        let mut line = String::new();
        for (c, cell) in r.iter().enumerate() {
            if c + 1 == r.len() {
                line.push_str(cell);
            } else {
                let _ = write!(line, "{cell:<w$}  ", w = widths[c]);
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

fn load_formula(src: &FormulaSource) -> Result<Formula, CliError> {
    let sig = if src.divisibility { Signature::Divisibility } else { Signature::Ring };
    if let Some(name) = &src.builtin {
        return Ok(builtin_formula(name)?);
    }
    let text = match (&src.formula, &src.file) {
        (Some(t), _) => t.clone(),
        (None, Some(path)) => fs::read_to_string(path).map_err(|e| CliError::Domain(format!("{}: {e}", path.display())))?,
        (None, None) => return Err(CliError::Usage("one of --formula, --builtin or --file is required".into())),
    };
    Ok(parse_formula(&text, sig)?)
}

fn ring(r: RingArg) -> Ring {
    match r {
        RingArg::Z => Ring::Z,
        RingArg::Q => Ring::Q,
    }
}

fn shape_json(s: &PrenexShape) -> Value {
    json!({
        "class": s.class.to_string(),
        "shape": s.profile_string(),
        "t": s.t,
        "c": s.c,
    })
}

pub fn normalize(a: &FormulaArgs) -> Result<Output, CliError> {
    let f = load_formula(&a.source)?;
    let p = to_positive_prenex(&f, ring(a.ring))?;
    let s = shape_and_classify(&p);
    let mut j = shape_json(&s);
    j["prenex"] = json!(p.to_string());
    Ok(single(format!("{p}\n"), j))
}

pub fn classify(a: &FormulaArgs) -> Result<Output, CliError> {
    let f = load_formula(&a.source)?;
    let s = shape_and_classify(&to_positive_prenex(&f, ring(a.ring))?);
    Ok(single(format!("{s}\n"), shape_json(&s)))
}

pub fn translate(ctx: &Context, a: &TranslateArgs) -> Result<Output, CliError> {
    let f = load_formula(&a.source)?;
    let model = match a.model.as_str() {
        "identity" => tr::identity_model_spec(),
        "synthetic" => tr::synthetic_model_spec(),
        "elliptic" => {
            let (e, p) = ctx.curve_and_point(&a.curve)?;
            let torsion = a.torsion.unwrap_or_else(|| curve::torsion_order(&e));
            tr::elliptic_model_spec(&e, &p, a.rank, torsion, None)?
        }
        path => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Domain(format!("{path}: {e}")))?;
            ModelSpec::parse(&text)?
        }
    };
    let table = match a.table {
        TableArg::General => Table::General,
        TableArg::Divmodel => Table::DivModel,
    };
    let t = tr::translate(&f, &model)?;
    let src = shape_and_classify(&to_positive_prenex(&f, Ring::Z)?);
    let dst = shape_and_classify(&to_positive_prenex(&t.formula, Ring::Q)?);
    let t_times = match &model.times {
        Some(m) => shape_and_classify(&to_positive_prenex(m, Ring::Q)?).t,
        None => 0,
    };
    let bound = tr::complexity_bound(src.class, model.classes.times, table)?;
    let t_bound = tr::t_bound(t_times, model.dimension, src.t);
    let within = dst.class.le(&bound) && dst.t <= t_bound;
    let text = format!(
        "{}\nsource={} class={} bound={} t={} t_bound={} within={}\n",
        t.formula, src.class, dst.class, bound, dst.t, t_bound, within
    );
    let j = json!({
        "translation": t.formula.to_string(),
        "dummies": t.dummies,
        "source": shape_json(&src),
        "result": shape_json(&dst),
        "bound": bound.to_string(),
        "t_bound": t_bound,
        "within": within,
    });
    Ok(single(text, j))
}

const WHICH: [Which; 3] = [Which::A, Which::B, Which::C];

fn power(p: &BigInt, e: u32, probable: bool) -> String {
    let q = if probable { "?" } else { "" };
    if e == 1 {
        format!("{p}{q}")
    } else {
        format!("{p}{q}^{e}")
    }
}

/// Factorization with prime powers that divide an earlier term in brackets.
fn marked(f: &Factorization, earlier: &[BigInt]) -> (String, Vec<Value>) {
    let mut parts = Vec::new();
    let mut js = Vec::new();
    for (p, e) in &f.factors {
        let primitive = earlier.iter().all(|x| !(x % p).is_zero());
        let s = power(p, *e, f.probable.contains(p));
        parts.push(if primitive { s } else { format!("[{s}]") });
        js.push(json!({ "p": p.to_string(), "e": e, "primitive": primitive, "certified": !f.probable.contains(p) }));
    }
    let body = if parts.is_empty() { "1".to_string() } else { parts.join(" * ") };
    (if f.sign < 0 { format!("-{body}") } else { body }, js)
}

pub fn eds_table(ctx: &Context, a: &TableArgs) -> Result<Output, CliError> {
    let (e, p) = ctx.curve_and_point(&a.curve)?;
    let seq = EdsSequence::compute(&e, &p, a.max_n)?;
    let mut text = String::new();
    let mut tables = serde_json::Map::new();
    for which in WHICH {
        let values: Vec<Option<BigInt>> = (1..=a.max_n).map(|n| seq.value(n, which).ok()).collect();
        if values.iter().all(Option::is_none) {
            continue;
        }
        let factors: Vec<Option<Factorization>> = if a.factor {
            values.par_iter().map(|v| v.as_ref().filter(|v| !v.is_zero()).map(|v| ctx.cache.factor(v))).collect()
        } else {
            vec![None; values.len()]
        };
        let mut rows = vec![{
            let mut h = vec!["n".to_string(), format!("{which}_n")];
            if a.factor {
                h.push("factorization".to_string());
            }
            h
        }];
        let mut js = Vec::new();
        for (i, v) in values.iter().enumerate() {
            let n = i + 1;
            let shown = v.as_ref().map_or("-".to_string(), |v| v.to_string());
            let mut row = vec![n.to_string(), shown.clone()];
            let mut j = json!({ "n": n, "value": v.as_ref().map(|v| v.to_string()) });
            if a.factor {
                let earlier: Vec<BigInt> = values[..i].iter().flatten().cloned().collect();
                match &factors[i] {
                    Some(f) => {
                        let (s, fj) = marked(f, &earlier);
                        row.push(s.clone());
                        j["factorization"] = json!(s);
                        j["factors"] = json!(fj);
                    }
                    None => row.push(shown),
                }
            }
            rows.push(row);
            js.push(j);
        }
        if !text.is_empty() {
            text.push('\n');
        }
        text.push_str(&aligned(&rows));
        tables.insert(which.to_string(), json!(js));
    }
    let j = json!({ "curve": a.curve.curve.clone().or(ctx.preset.curve.clone()), "max_n": a.max_n, "tables": tables });
    Ok(single(text, j))
}

fn join<T: ToString>(xs: impl IntoIterator<Item = T>) -> String {
    xs.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

pub fn eds_check(ctx: &Context, a: &CheckArgs) -> Result<Output, CliError> {
    let (e, p) = ctx.curve_and_point(&a.curve)?;
    let rep = eds::check_identities(&e, &p, a.max_n, a.max_t)?;
    let h = &rep.hypotheses;
    let mut text = format!(
        "b_squarefree={} descent_disc_squarefree={} singular_primes=[{}] expected_primes=[{}]\n",
        h.b_squarefree,
        h.descent_disc_squarefree,
        join(&h.singular_primes),
        join(&h.expected_primes)
    );
    let mut rows = vec![vec!["law".to_string(), "checked".into(), "failures".into(), "unexpected".into()]];
    let mut laws = Vec::new();
    for (law, count) in &rep.checked {
        let fails = rep.failures.iter().filter(|f| f.law == *law).count();
        let unexpected = rep.unexpected().filter(|f| f.law == *law).count();
        rows.push(vec![law.to_string(), count.to_string(), fails.to_string(), unexpected.to_string()]);
        laws.push(json!({ "law": law.to_string(), "checked": count, "failures": fails, "unexpected": unexpected }));
    }
    text.push_str(&aligned(&rows));
    let mut fails = Vec::new();
    if !rep.failures.is_empty() {
        text.push_str("failures:\n");
        for f in &rep.failures {
            let _ = writeln!(text, "  {f}");
            fails.push(json!({
                "law": f.law.to_string(),
                "indices": f.indices,
                "primes": f.primes.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
                "expected": f.expected,
            }));
        }
    }
    let mut rows = vec![vec!["n".to_string(), "ratio".into(), "raw".into(), "normalized".into()]];
    let mut doubles = Vec::new();
    for d in &rep.double_index {
        rows.push(vec![d.n.to_string(), d.ratio.to_string(), d.raw_holds.to_string(), d.normalized_holds.to_string()]);
        doubles.push(json!({ "n": d.n, "ratio": d.ratio.to_string(), "raw": d.raw_holds, "normalized": d.normalized_holds }));
    }
    text.push_str("double index:\n");
    text.push_str(&aligned(&rows));
    let j = json!({
        "hypotheses": {
            "b_squarefree": h.b_squarefree,
            "descent_disc_squarefree": h.descent_disc_squarefree,
            "singular_primes": h.singular_primes.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
            "expected_primes": h.expected_primes.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
        },
        "laws": laws,
        "failures": fails,
        "double_index": doubles,
    });
    Ok(single(text, j))
}

pub fn eds_divides(ctx: &Context, a: &DividesArgs) -> Result<Output, CliError> {
    if a.m == 0 || a.n == 0 {
        return Err(CliError::Usage("--m and --n must be positive".into()));
    }
    let (e, mut p) = ctx.curve_and_point(&a.curve)?;
    let mut text = String::new();
    let mut j = json!({});
    if a.good_multiple {
        let (k, q) = curve::least_good_multiple(&e, &p)?;
        let (x, y) = (q.x().unwrap(), q.y().unwrap());
        let _ = writeln!(text, "multiple={k} point={x},{y}");
        j["multiple"] = json!(k);
        j["point"] = json!(format!("{x},{y}"));
        p = q;
    }
    let r = ctx.prime_set(&a.set)?;
    let seq = EdsSequence::compute(&e, &p, a.m + a.n)?;
    let d = eds::divides_via_eds(&seq, a.m, a.n, &r)?;
    let _ = writeln!(text, "m={} n={} divides={d}", a.m, a.n);
    j["m"] = json!(a.m);
    j["n"] = json!(a.n);
    j["divides"] = json!(d);
    Ok(single(text, j))
}

pub fn primitivity_scan(ctx: &Context, a: &ScanArgs) -> Result<Output, CliError> {
    let which: Which = a.seq.parse().map_err(CliError::Usage)?;
    let (e, p) = ctx.curve_and_point(&a.curve)?;
    let r = ctx.prime_set(&a.set)?;
    let seq = EdsSequence::compute(&e, &p, a.max_n)?;
    let opts = ScanOptions { which, odd_order: a.odd_order, weak: a.weak, n_max: a.max_n, digit_cap: a.digit_cap };
    let rep = eds::primitivity_scan(&seq, &r, opts, &ctx.cache)?;
    let mut rows = vec![vec!["n".to_string(), "digits".into(), "primitive".into(), "odd_order".into(), "tags".into()]];
    let mut json_lines = Vec::new();
    for row in &rep.rows {
        let digits = row.value.magnitude().to_string().len();
        rows.push(vec![
            row.n.to_string(),
            digits.to_string(),
            join(&row.primitive),
            join(&row.odd_order_primitive),
            row.tags.join(","),
        ]);
        json_lines.push(json!({
            "n": row.n,
            "value": row.value.to_string(),
            "factorization": row.factors.as_ref().map(|f| f.to_string()),
            "primitive": row.primitive.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
            "odd_order_primitive": row.odd_order_primitive.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
            "tags": row.tags,
        }));
    }
    let mut text = aligned(&rows);
    let largest = rep.largest_failing().map_or("none".to_string(), |n| n.to_string());
    let _ = writeln!(text, "failing=[{}] truncated=[{}] largest_failing={largest}", join(&rep.failing), join(&rep.truncated));
    json_lines.push(json!({
        "summary": { "failing": rep.failing, "truncated": rep.truncated, "largest_failing": rep.largest_failing() }
    }));
    Ok(Output { text, json: json_lines })
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or("none".to_string(), |x| x.to_string())
}

pub fn ward(ctx: &Context, a: &WardArgs) -> Result<Output, CliError> {
    let (e, p) = ctx.curve_and_point(&a.curve)?;
    let seq = EdsSequence::compute(&e, &p, a.max_n)?;
    let w = periodicity::ward_data_from(&seq, a.prime)?;
    let sy = periodicity::symbols(&periodicity::residues_of(&seq, a.prime), a.prime);
    let pattern: Vec<i8> = w.symbol_period.map(|per| sy[..per].to_vec()).unwrap_or_default();
    let text = format!("rho={} symbol_period={} pattern={}\n", opt(&w.rho), opt(&w.symbol_period), join(&pattern));
    let classes = periodicity::negative_classes_from(&seq, a.prime).ok();
    let j = json!({
        "p": w.p,
        "rho": w.rho,
        "symbol_period": w.symbol_period,
        "pattern": pattern,
        "point_order": w.point_order,
        "bad_prime": w.bad_prime,
        "epsilon": w.epsilon,
        "kappa": w.kappa,
        "a_p": w.a_p,
        "pi_formula": w.pi_formula,
        "pi_observed": w.pi_observed,
        "negative_classes": classes.map(|c| json!({ "modulus": c.modulus(), "residues": c.residues() })),
    });
    Ok(single(text, j))
}

pub fn density(ctx: &Context, a: &DensityArgs) -> Result<Output, CliError> {
    let mut text = String::new();
    let mut per_prime = Vec::new();
    let sets: Vec<ResidueClassSet> = if let Some(path) = &a.classes {
        let body = fs::read_to_string(path).map_err(|e| CliError::Domain(format!("{}: {e}", path.display())))?;
        ResidueClassSet::parse_file(&body)?
    } else {
        let primes: Vec<u64> = if a.prime.is_empty() {
            let list = ctx.preset.primes.as_ref().ok_or_else(|| CliError::Usage("--prime or --classes required".into()))?;
            list.split(',')
                .map(|s| s.trim().parse().map_err(|_| CliError::Usage(format!("bad prime '{s}'"))))
                .collect::<Result<_, _>>()?
        } else {
            a.prime.clone()
        };
        let (e, p) = ctx.curve_and_point(&a.curve)?;
        let seq = EdsSequence::compute(&e, &p, a.max_n)?;
        let sets = primes
            .par_iter()
            .map(|&q| periodicity::negative_classes_from(&seq, q))
            .collect::<Result<Vec<_>, _>>()?;
        for (q, s) in primes.iter().zip(&sets) {
            let _ = writeln!(text, "p={q} symbol_period={} negative={}", s.modulus(), join(s.residues()));
            per_prime.push(json!({ "p": q, "symbol_period": s.modulus(), "negative": s.residues() }));
        }
        sets
    };
    let d = periodicity::density_union(&sets)?;
    let _ = writeln!(text, "density={d}");
    Ok(single(text, json!({ "primes": per_prime, "density": d.to_string() })))
}

pub fn heuristic(a: &HeuristicArgs) -> Result<Output, CliError> {
    let r = periodicity::heuristic_report(HeuristicParams { rank: a.rank, num_disc: a.num_disc, x_cap: a.bound })?;
    let text = format!(
        "delta={} partial_sum={:.6} converges={} mult_group_partial_sum={:.6} mult_group_diverges={}\n",
        r.delta, r.partial_sum, r.converges, r.mult_group_partial_sum, r.mult_group_diverges
    );
    let j = json!({
        "delta": r.delta.to_string(),
        "partial_sum": format!("{:.6}", r.partial_sum),
        "converges": r.converges,
        "mult_group_partial_sum": format!("{:.6}", r.mult_group_partial_sum),
        "mult_group_diverges": r.mult_group_diverges,
    });
    Ok(single(text, j))
}

pub fn k3_scan(a: &K3Args) -> Result<Output, CliError> {
    if !(0..=1000).contains(&a.bound) {
        return Err(CliError::Domain(format!("bound must lie in [0, 1000], got {}", a.bound)));
    }
    let sols = eds::conic_fibration_scan(a.bound);
    let mut rows = vec![vec!["A".to_string(), "B".into(), "t".into(), "X".into(), "Y".into()]];
    let mut json_lines = Vec::new();
    for s in &sols {
        rows.push([s.a, s.b, s.t, s.x, s.y].iter().map(|v| v.to_string()).collect());
        json_lines.push(json!({ "A": s.a, "B": s.b, "t": s.t, "X": s.x, "Y": s.y }));
    }
    let mut text = aligned(&rows);
    let _ = writeln!(text, "solutions={}", sols.len());
    json_lines.push(json!({ "summary": { "solutions": sols.len() } }));
    Ok(Output { text, json: json_lines })
}
