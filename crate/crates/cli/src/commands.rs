use std::fs;
use std::path::Path;
use std::time::Duration;

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;
use serde_json::{json, Value};

use transference_core::arith::{
    format_rational, int, parse_rational, ratio, rational_pow, to_f64, RationalMatrix,
};
use transference_core::delta::delta_bounds_report;
use transference_core::exponents::{
    beta_lower_from_mbeta, estimate_exponents, tr_beta_lower, trivial_bounds_check, uniform_maps,
    Bound, Exponent, UniformMap,
};
use transference_core::matrix_file::parse_matrix_file;
use transference_core::search::{
    badness_infimum, best_approximations, littlewood_find, littlewood_scan, uniform_feasible, ApproxRecord,
    SearchBudget,
};
use transference_core::secdual::{
    box_section_volume, box_section_volume_mc, parallelepiped_section_volume, AxisBox, Parallelepiped,
};
use transference_core::transfer::{
    phi_from_psi, revalidate, verify_mahler, verify_multitrans, Certificate, FunctionSpec, VerifyOptions,
};
use transference_core::{Error, Result};

use crate::output::{print_json, Run};
use crate::{
    DeltaArgs, ExponentsArgs, ExponentsCommand, LemmaArgs, LittlewoodArgs, MapArgs, PsiArgs, ScanArgs,
    SectionArgs, Status, TransferArgs, Which,
};

fn usage(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

fn split_list(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|p| !p.is_empty())
}

fn parse_i64_list(s: &str, what: &str) -> Result<Vec<i64>> {
    split_list(s)
        .map(|p| p.parse().map_err(|_| usage(format!("{what}: {p:?} is not an integer"))))
        .collect()
}

fn parse_rational_list(s: &str) -> Result<Vec<BigRational>> {
    split_list(s).map(parse_rational).collect()
}

fn parse_f64_list(s: &str, what: &str) -> Result<Vec<f64>> {
    split_list(s)
        .map(|p| p.parse().map_err(|_| usage(format!("{what}: {p:?} is not a number"))))
        .collect()
}

fn time_limit(secs: Option<f64>) -> Result<Option<Duration>> {
    secs.map(|s| Duration::try_from_secs_f64(s).map_err(|_| usage(format!("bad time limit {s}"))))
        .transpose()
}

/// Prints `value` or writes it to `out` with a manifest.
fn emit<T: Serialize>(run: &Run, out: Option<&Path>, value: &T) -> Result<()> {
    match out {
        Some(path) => run.write_json(path, value),
        None => {
            print_json(value);
            Ok(())
        }
    }
}

fn load_theta(run: &mut Run, path: &Path) -> Result<RationalMatrix> {
    run.input(path);
    Ok(parse_matrix_file(path)?.theta)
}

pub fn delta(a: DeltaArgs) -> Result<Status> {
    let run = Run::new("delta", a.seed);
    let (_, report) = delta_bounds_report(a.dmax as usize)?;
    let mut ok = report.all_ok();
    let mut rows = Vec::with_capacity(report.rows.len());
    for row in &report.rows {
        let mut v = serde_json::to_value(row).expect("row serializes");
        if a.mc_check {
            let d = row.d;
            let cube = AxisBox::cube(d)?;
            let mc = box_section_volume_mc(&cube, &vec![1.0; d], a.samples, a.seed.wrapping_add(d as u64))?;
            let scale = 2f64.powi(d as i32 - 1) * (d as f64).sqrt();
            let (est, se) = (mc.value / scale, mc.std_err / scale);
            let agrees = (est - row.delta_float).abs() <= 3.0 * se + 1e-12 * row.delta_float;
            ok &= agrees;
            v["mc_estimate"] = json!(est);
            v["mc_std_err"] = json!(se);
            v["mc_ok"] = json!(agrees);
        }
        rows.push(v);
    }
    emit(&run, a.out.as_deref(), &rows)?;
    Ok(if ok { Status::Ok } else { Status::Failed })
}

fn parse_basis(s: &str, d: usize) -> Result<RationalMatrix> {
    let rows = s
        .split(';')
        .map(parse_rational_list)
        .collect::<Result<Vec<_>>>()?;
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(Error::DimensionMismatch(format!("basis must be {d}x{d}")));
    }
    RationalMatrix::from_rows(rows)
}

pub fn section(a: SectionArgs) -> Result<Status> {
    let run = Run::new("section", a.seed);
    let shape = AxisBox::new(parse_rational_list(&a.half_sides)?)?;
    let e = parse_rational_list(&a.dir)?;
    let d = shape.dim();
    let volume = match &a.basis {
        Some(b) => parallelepiped_section_volume(&Parallelepiped::new(shape.clone(), parse_basis(b, d)?)?, &e)?,
        None => box_section_volume(&shape, &e)?,
    };
    let mut report = json!({
        "dim": d,
        "volume": volume,
        "volume_float": volume.to_f64(),
    });
    let mut status = Status::Ok;
    if a.mc {
        if a.basis.is_some() {
            return Err(usage("--mc is available for boxes only"));
        }
        let ef: Vec<f64> = e.iter().map(to_f64).collect();
        let mc = box_section_volume_mc(&shape, &ef, a.samples, a.seed)?;
        let agrees = mc.agrees_with(volume.to_f64(), 3.0);
        report["mc"] = json!({"estimate": mc.value, "std_err": mc.std_err, "samples": mc.samples, "agrees": agrees});
        if !agrees {
            status = Status::Failed;
        }
    }
    emit(&run, a.out.as_deref(), &report)?;
    Ok(status)
}

fn record_json(r: &ApproxRecord) -> Value {
    let mut v = serde_json::to_value(r).expect("record serializes");
    v["t_pow_float"] = json!(to_f64(&r.t_pow));
    v["u_pow_float"] = json!(to_f64(&r.u_pow));
    v
}

pub fn scan(a: ScanArgs) -> Result<Status> {
    let mut run = Run::new("scan", 0);
    let theta = load_theta(&mut run, &a.theta)?;
    let mut budget = SearchBudget::new(a.sup_bound)?;
    if let Some(limit) = time_limit(a.time_limit)? {
        budget = budget.with_time_limit(limit);
    }
    let records = best_approximations(&theta, &budget)?;
    let mut summary = json!({
        "m": theta.cols(),
        "n": theta.rows(),
        "sup_bound": a.sup_bound,
        "record_count": records.len(),
        "last_record": records.last().map(record_json),
    });
    match &a.records_out {
        Some(path) => {
            let lines: Vec<Value> = records.iter().map(record_json).collect();
            run.write_jsonl(path, &lines)?;
            summary["records_out"] = json!(path.display().to_string());
        }
        None => summary["records"] = Value::Array(records.iter().map(record_json).collect()),
    }
    if a.badness {
        let b = badness_infimum(&theta, &budget)?;
        let mut v = serde_json::to_value(&b).expect("badness serializes");
        v["value_float"] = json!(to_f64(&b.value));
        summary["badness"] = v;
    }
    if let Some(spec) = &a.uniform {
        let (t, g) = spec
            .split_once(':')
            .ok_or_else(|| usage("--uniform expects t:γ"))?;
        let (t, g) = (parse_rational(t)?, parse_rational(g)?);
        let feasible = uniform_feasible(&theta, &t, &g, &budget)?;
        summary["uniform"] = json!({"t": format_rational(&t), "gamma": format_rational(&g), "feasible": feasible});
    }
    emit(&run, a.out.as_deref(), &summary)?;
    Ok(Status::Ok)
}

fn parse_pair(s: &str) -> Result<(Vec<i64>, Vec<i64>)> {
    let (x, y) = s
        .split_once(':')
        .ok_or_else(|| usage("--pair expects x1,...,xm:y1,...,yn"))?;
    Ok((parse_i64_list(x, "x")?, parse_i64_list(y, "y")?))
}

pub fn transfer(a: TransferArgs) -> Result<Status> {
    let mut run = Run::new("transfer", 0);
    if let Some(path) = &a.revalidate {
        let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        let cert: Certificate =
            serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        let report = revalidate(&cert)?;
        let ok = report.ok();
        print_json(&report);
        return Ok(if ok { Status::Ok } else { Status::Failed });
    }
    let theta = load_theta(&mut run, a.theta.as_deref().expect("required by clap"))?;
    let (x, y) = parse_pair(a.pair.as_deref().expect("required by clap"))?;
    let explicit_budget = match &a.budget {
        Some(b) => match parse_rational_list(b)?.as_slice() {
            [xb, ub] => Some((xb.clone(), ub.clone())),
            _ => return Err(usage("--budget expects two values")),
        },
        None => None,
    };
    let options = VerifyOptions {
        explicit_budget,
        time_limit: time_limit(a.time_limit)?,
    };
    let cert = if a.mahler {
        verify_mahler(&theta, &x, &y, &options)?
    } else {
        verify_multitrans(&theta, &x, &y, &options)?
    };
    match &a.certificate_out {
        Some(path) => {
            run.write_json(path, &cert)?;
            print_json(&json!({
                "certificate": path.display().to_string(),
                "kind": cert.kind,
                "all_hold": cert.all_hold,
                "witness": cert.witness,
            }));
        }
        None => print_json(&cert),
    }
    Ok(if cert.all_hold { Status::Ok } else { Status::Failed })
}

fn parse_spec(s: &str, run: &mut Run) -> Result<FunctionSpec> {
    if let Some(g) = s.strip_prefix("power:") {
        let gamma = match g.parse::<f64>() {
            Ok(v) => v,
            Err(_) => to_f64(&parse_rational(g).map_err(|_| usage(format!("bad γ {g:?}")))?),
        };
        return Ok(FunctionSpec::Power { gamma });
    }
    if let Some(file) = s.strip_prefix("table:") {
        let path = Path::new(file);
        run.input(path);
        let text = fs::read_to_string(path).map_err(|e| usage(format!("{file}: {e}")))?;
        let points: Vec<(f64, f64)> =
            serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{file}: expected [[t, ψ], ...]: {e}")))?;
        return Ok(FunctionSpec::Tabulated { points });
    }
    match s {
        "log1" => Ok(FunctionSpec::LogLittlewood1),
        "log2" => Ok(FunctionSpec::LogLittlewood2),
        _ => Err(usage(format!("unknown spec {s:?}; use power:γ, log1, log2 or table:FILE"))),
    }
}

pub fn psi_transfer(a: PsiArgs) -> Result<Status> {
    let mut run = Run::new("psi-transfer", 0);
    let spec = parse_spec(&a.spec, &mut run)?;
    let points = parse_f64_list(&a.eval, "--eval")?;
    if a.chi && a.n != 1 {
        return Err(usage("--chi needs n = 1"));
    }
    let (phi, report) = phi_from_psi(&spec, a.m, a.n)?;
    let values = points
        .iter()
        .map(|&s| {
            let mut v = json!({"s": s, "phi": phi.phi(s)?});
            if a.chi {
                v["chi"] = json!(phi.chi(s)?);
            }
            Ok(v)
        })
        .collect::<Result<Vec<_>>>()?;
    emit(&run, a.out.as_deref(), &json!({"spec": spec, "report": report, "values": values}))?;
    Ok(Status::Ok)
}

fn parse_exponent(s: &str) -> Result<Exponent> {
    match s.trim() {
        "inf" | "+inf" | "infinity" => Ok(Exponent::Infinity),
        v => Ok(Exponent::Finite(parse_rational(v)?)),
    }
}

fn exponent_map(a: MapArgs) -> Result<Status> {
    let gamma = parse_exponent(&a.gamma)?;
    let bound: Bound = match a.which {
        Which::Dyson => uniform_maps(&gamma, a.m, a.n, UniformMap::Dyson)?,
        Which::German => uniform_maps(&gamma, a.m, a.n, UniformMap::German)?,
        Which::TrBeta => {
            if a.n != 1 {
                return Err(usage("tr-beta is the n = 1 map"));
            }
            tr_beta_lower(&gamma, a.m)?
        }
        Which::BetaFromMbeta => {
            if a.m != 1 {
                return Err(usage("beta-from-mbeta is the m = 1 map"));
            }
            beta_lower_from_mbeta(&gamma, a.n)?
        }
    };
    let value_float = bound.value.to_f64();
    print_json(&json!({
        "gamma": gamma,
        "m": a.m,
        "n": a.n,
        "value": bound.value,
        "value_float": if value_float.is_finite() { json!(value_float) } else { json!("inf") },
        "vacuous": bound.vacuous,
    }));
    Ok(Status::Ok)
}

fn read_records(path: &Path) -> Result<Vec<ApproxRecord>> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(k, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse(format!("{}:{}: {e}", path.display(), k + 1)))
        })
        .collect()
}

pub fn exponents(a: ExponentsArgs) -> Result<Status> {
    if let Some(ExponentsCommand::Map(m)) = a.map {
        return exponent_map(m);
    }
    let mut run = Run::new("exponents", 0);
    let (Some(path), Some(m), Some(n)) = (a.records.as_deref(), a.m, a.n) else {
        return Err(usage("exponents needs --records, --m and --n (or the map subcommand)"));
    };
    run.input(path);
    let records = read_records(path)?;
    let report = estimate_exponents(&records, m, n, a.tail)?;
    let checks = trivial_bounds_check(&report, m, n);
    let ok = checks.iter().all(|c| c.passed);
    emit(&run, a.out.as_deref(), &json!({"report": report, "checks": checks}))?;
    Ok(if ok { Status::Ok } else { Status::Failed })
}

fn ten_to_minus(k: u32) -> BigRational {
    BigRational::one() / rational_pow(&int(10), k as i32)
}

pub fn littlewood(a: LittlewoodArgs) -> Result<Status> {
    let run = Run::new("littlewood", 0);
    let alpha = parse_rational(&a.alpha)?;
    let beta = parse_rational(&a.beta)?;
    let decimal = |s: &str| s.contains('.') && !s.contains('/');
    let precision = match a.precision {
        Some(k) => Some(ten_to_minus(k)),
        None if decimal(&a.alpha) || decimal(&a.beta) => {
            return Err(usage("decimal inputs need --precision"));
        }
        None => None,
    };
    let records = littlewood_scan(&alpha, &beta, a.qmax, precision.as_ref())?;
    let best = records.last().expect("q = 1 is always a record");
    let mut summary = json!({
        "qmax": a.qmax,
        "record_count": records.len(),
        "best": best,
        "best_value_float": to_f64(&best.value),
    });
    match &a.records_out {
        Some(path) => {
            run.write_jsonl(path, &records)?;
            summary["records_out"] = json!(path.display().to_string());
        }
        None => summary["records"] = serde_json::to_value(&records).expect("records serialize"),
    }
    let mut status = Status::Ok;
    if a.desk_test {
        let mu = best.value.clone();
        let four_thirds = ratio(4, 3);
        let value_cmp = rational_pow(&four_thirds, 9) * &mu;
        let dist_cmp = rational_pow(&four_thirds, 5) * &mu;
        let hit = if mu.is_zero() {
            None
        } else {
            littlewood_find(&alpha, &beta, a.qmax, &value_cmp, &dist_cmp)?
        };
        if hit.is_none() {
            status = Status::Inconclusive;
        }
        summary["desk_test"] = json!({
            "mu": format_rational(&mu),
            "value_bound_fourth_power": format_rational(&value_cmp),
            "dist_bound_fourth_power": format_rational(&dist_cmp),
            "hit": hit,
        });
    }
    emit(&run, a.out.as_deref(), &summary)?;
    Ok(status)
}

pub fn verify_lemmas(a: LemmaArgs) -> Result<Status> {
    let run = Run::new("verify-lemmas", a.seed);
    let report = transference_core::secdual::verify_lemmas(a.d as usize, a.trials, a.samples, a.seed)?;
    emit(&run, a.out.as_deref(), &report)?;
    Ok(if report.all_pass { Status::Ok } else { Status::Failed })
}
