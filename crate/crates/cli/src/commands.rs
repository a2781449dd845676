use crate::args::*;
use crate::emit::{jnum, num, CliError, CliResult, Report};
use num_traits::ToPrimitive;
use serde_json::Value;
use std::str::FromStr;
use weyl_core::exactzero::{certify_zero, eval_rational_exactly, RationalPoint};
use weyl_core::explore::{
    cf_expand, growth_band_check, hit_fraction, liminf_estimate, orbit_stats, parabola_points, psi_distribution,
    restricted_membership_scan, search_small,
};
use weyl_core::families::{
    build_dio_point, enumerate_family, estimate_delta, sample_family, DioFamily, Family, FamilyPoint,
};
use weyl_core::fractal::{
    box_count, cantor_draw, cantor_expectation_test, cantor_measure, cantor_measure_exact, cantor_sample,
    cantor_weyl_statistic, CantorRealization, RationalRect, Rect,
};
use weyl_core::perturb::{continuity_check, fitted_constant, incomplete_bound_scan, BoundKind, BoundProfile, ScanOptions, TAU_CAP};
use weyl_core::sumcore::{eval_direct, eval_incremental, trace, TorusPoint};

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn parse<T: FromStr<Err = weyl_core::error::WeylError>>(s: &str) -> CliResult<T> {
    Ok(s.parse::<T>()?)
}

fn parse_reals(s: &str, what: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| usage(format!("{what}: `{t}` is not a number")))
        })
        .collect()
}

/// Reals `x1,...,xd`, or a rational point when a `/` is present.
fn parse_point(s: &str) -> CliResult<(TorusPoint, Option<RationalPoint>)> {
    if s.contains('/') {
        let r: RationalPoint = parse(s)?;
        Ok((r.to_torus(), Some(r)))
    } else {
        Ok((TorusPoint::new(&parse_reals(s, "point")?)?, None))
    }
}

fn coords_text(x: &TorusPoint) -> String {
    x.coords().iter().map(|&c| num(c)).collect::<Vec<_>>().join(",")
}

fn family_row(report: &mut Report, fp: &FamilyPoint) {
    let params: Vec<String> = fp.params.iter().map(|v| v.to_string()).collect();
    report.row(vec![
        fp.family.to_string(),
        fp.prime.to_string(),
        params.join(" "),
        fp.point.to_string(),
        fp.vanishing_span.to_string(),
        if fp.degenerate { "degenerate" } else { "vanishing" }.into(),
    ]);
}

pub fn eval(a: &EvalArgs) -> CliResult<Report> {
    let (x, rational) = parse_point(&a.point)?;
    if let Some(stride) = a.stride {
        let t = trace(&x, a.n, stride)?;
        let mut r = Report::table(&["n", "re", "im", "abs"]);
        for (n, &(re, im)) in t.checkpoints.iter().zip(&t.values) {
            r.row(vec![n.to_string(), num(re), num(im), num(re.hypot(im))]);
        }
        r.set("checkpoints", t.len());
        return Ok(r);
    }
    let s = match a.kernel {
        Kernel::Incremental => eval_incremental(&x, a.n)?,
        Kernel::Direct => eval_direct(&x, a.n)?,
        Kernel::Exact => {
            let rp = rational.ok_or_else(|| usage("--kernel exact needs a rational point a1,...,ad/m"))?;
            eval_rational_exactly(&rp, a.n)?
        }
    };
    let mut r = Report::table(&["n", "re", "im", "abs"]);
    r.row(vec![a.n.to_string(), num(s.re), num(s.im), num(s.norm())]);
    r.set("re", jnum(s.re));
    r.set("im", jnum(s.im));
    r.set("abs", jnum(s.norm()));
    Ok(r)
}

pub fn certify(a: &CertifyArgs) -> CliResult<Report> {
    let pt: RationalPoint = parse(&a.point)?;
    let span = a.span.unwrap_or(pt.modulus());
    let c = certify_zero(&pt, span)?;
    let mut r = Report::table(&["point", "span", "mechanism", "verified", "residual"]);
    r.row(vec![
        c.point.to_string(),
        c.span.to_string(),
        c.mechanism.to_string(),
        c.verified.to_string(),
        num(c.residual),
    ]);
    r.set("mechanism", c.mechanism.as_str());
    r.set("verified", c.verified);
    r.set("residual", jnum(c.residual));
    Ok(r)
}

pub fn family(a: &FamilyArgs) -> CliResult<Report> {
    let fam: Family = parse(&a.family)?;
    let points = match a.sample {
        Some(k) => sample_family(fam, a.p, a.d, k, a.seed)?,
        None => enumerate_family(fam, a.p, a.d)?,
    };
    let mut r = Report::table(&["family", "prime", "params", "point", "vanishing_span", "flag"]);
    for fp in &points {
        family_row(&mut r, fp);
    }
    r.set("members", points.len());
    r.set("degenerate", points.iter().filter(|p| p.degenerate).count());
    Ok(r)
}

pub fn dio(a: &DioArgs) -> CliResult<Report> {
    let fam: DioFamily = parse(&a.family)?;
    let pt = build_dio_point(fam, a.d, a.depth, a.seed)?;
    pt.verify()?;
    let mut r = Report::table(&["level", "prime", "modulus", "numerators", "widths", "margin"]);
    for (i, w) in pt.witnesses.iter().enumerate() {
        let nums: Vec<String> = w.numerators.iter().map(|v| format!("{v}/{}", w.modulus)).collect();
        let widths: Vec<String> = w.widths.iter().map(|v| num(v.to_f64().unwrap_or(f64::NAN))).collect();
        r.row(vec![
            (i + 1).to_string(),
            w.prime.to_string(),
            w.modulus.to_string(),
            nums.join(" "),
            widths.join(" "),
            num(w.margin),
        ]);
    }
    r.set("degree", pt.degree);
    r.set("approx", coords_text(&pt.approx));
    r.set("midpoint", coords_text(&pt.midpoint()));
    let interval: Vec<String> = pt.interval.iter().map(|(lo, hi)| format!("[{lo}, {hi})")).collect();
    r.set("interval", interval.join(" x "));
    r.set("verified", true);
    Ok(r)
}

pub fn delta(a: &DeltaArgs) -> CliResult<Report> {
    let fam: Family = parse(&a.family)?;
    let e = estimate_delta(fam, a.p, a.d, a.eta, a.samples, a.seed)?;
    let mut r = Report::table(&["family", "p", "eta", "delta", "candidate", "halvings", "fitted_c", "max_sampled", "samples"]);
    r.row(vec![
        fam.to_string(),
        a.p.to_string(),
        num(a.eta),
        num(e.delta),
        num(e.candidate),
        e.halvings.to_string(),
        num(e.fitted_c),
        num(e.max_sampled),
        e.samples.to_string(),
    ]);
    r.set("delta", jnum(e.delta));
    r.set("fitted_c", jnum(e.fitted_c));
    Ok(r)
}

pub fn bounds(a: &BoundsArgs) -> CliResult<Report> {
    let kind: BoundKind = parse(&a.kind)?;
    let opts = ScanOptions {
        d: a.d,
        exhaustive_limit: a.exhaustive_limit,
        samples: a.samples,
        seed: a.seed,
    };
    let rows = incomplete_bound_scan(kind, a.p_max, &opts)?;
    let mut r = Report::table(&["kind", "p", "worst_abs", "worst_ratio", "coeffs", "start", "len", "scanned", "exhaustive"]);
    for row in &rows {
        let coeffs: Vec<String> = row.coeffs.iter().map(|c| c.to_string()).collect();
        r.row(vec![
            row.kind.to_string(),
            row.p.to_string(),
            num(row.worst_abs),
            num(row.worst_ratio),
            coeffs.join(" "),
            row.start.to_string(),
            row.len.to_string(),
            row.scanned.to_string(),
            row.exhaustive.to_string(),
        ]);
    }
    r.set("primes", rows.len());
    r.set("fitted_constant", jnum(fitted_constant(&rows)));
    Ok(r)
}

pub fn continuity(a: &ContinuityArgs) -> CliResult<Report> {
    let anchor: RationalPoint = parse(&a.anchor)?;
    let taus = parse_reals(&a.tau, "tau")?;
    if let Some(&bad) = taus.iter().find(|&&t| !(0.0..=TAU_CAP).contains(&t)) {
        return Err(usage(format!("tau must lie in [0, {TAU_CAP}], got {bad}")));
    }
    let need_p = || a.p.ok_or_else(|| usage("--p is required for this profile"));
    let profile = match a.profile {
        ProfileKind::Gauss => BoundProfile::gauss(need_p()?, 1.0)?,
        ProfileKind::Quadratic4p => BoundProfile::quadratic_4p(need_p()?, 1.0)?,
        ProfileKind::Custom => BoundProfile::new(a.alpha, a.kappa, a.k, 1.0, "custom")?,
    };
    let mut r = Report::table(&["tau", "n", "lhs", "rhs_unit", "ratio", "fitted_c", "relative_ratio", "corner_lhs", "samples"]);
    let mut worst: f64 = 0.0;
    for &tau in &taus {
        let rep = continuity_check(&anchor, &profile.with_tau(tau), a.n, a.samples, a.seed)?;
        worst = worst.max(rep.ratio);
        r.row(vec![
            num(tau),
            rep.n.to_string(),
            num(rep.lhs),
            num(rep.rhs_unit),
            num(rep.ratio),
            num(rep.fitted_c),
            num(rep.relative_ratio),
            num(rep.corner_lhs),
            rep.samples.to_string(),
        ]);
    }
    r.set("profile_description", profile.description.as_str());
    r.set("worst_ratio", jnum(worst));
    Ok(r)
}

pub fn liminf(a: &LiminfArgs) -> CliResult<Report> {
    let (x, _) = parse_point(&a.point)?;
    let e = liminf_estimate(&x, a.n_max)?;
    let mut r = Report::table(&["n", "running_min_abs"]);
    for &(n, v) in &e.record_curve {
        r.row(vec![n.to_string(), num(v)]);
    }
    r.set("min_abs", jnum(e.min_abs));
    r.set("argmin_n", e.argmin_n);
    Ok(r)
}

fn parse_ranges(s: &str) -> CliResult<Vec<(f64, f64)>> {
    s.split(',')
        .map(|part| {
            let (lo, hi) = part
                .split_once("..")
                .ok_or_else(|| usage(format!("range `{part}` is not lo..hi")))?;
            let p = |t: &str| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| usage(format!("range `{part}`: `{t}` is not a number")))
            };
            Ok((p(lo)?, p(hi)?))
        })
        .collect()
}

pub fn search(a: &SearchArgs) -> CliResult<Report> {
    let region = parse_ranges(&a.region)?;
    let o = search_small(&region, region.len(), a.eps, a.n_cap, a.budget, a.seed)?;
    let mut r = Report::table(&["success", "point", "n", "abs", "evaluations", "anchor"]);
    r.row(vec![
        o.success.to_string(),
        o.point.iter().map(|&c| num(c)).collect::<Vec<_>>().join(" "),
        o.n.to_string(),
        num(o.abs),
        o.evaluations.to_string(),
        o.anchor.clone().unwrap_or_default(),
    ]);
    r.set("success", o.success);
    r.set("abs", jnum(o.abs));
    Ok(r)
}

pub fn orbit(a: &OrbitArgs) -> CliResult<Report> {
    let (x, _) = parse_point(&a.point)?;
    let o = orbit_stats(&x, a.n_max, a.window, a.grid)?;
    let mut r = Report::table(&["n", "running_max_abs"]);
    for &(n, v) in &o.checkpoints {
        r.row(vec![n.to_string(), num(v)]);
    }
    r.set("max_abs", jnum(o.max_abs));
    r.set("argmax_n", o.argmax_n);
    r.set("cells_visited", o.cells_visited);
    r.set("visited_fraction", jnum(o.visited_fraction));
    r.set("line_direction", format!("{},{}", num(o.line_fit.direction.0), num(o.line_fit.direction.1)));
    r.set("line_offset", jnum(o.line_fit.offset));
    r.set("max_residual", jnum(o.line_fit.max_residual));
    r.set("growth_exponent", o.growth_exponent.map_or(Value::Null, jnum));
    Ok(r)
}

pub fn restricted(a: &RestrictedArgs) -> CliResult<Report> {
    let pts = parabola_points(a.count);
    let hits = restricted_membership_scan(a.d, a.alpha, &pts, a.n_min, a.n_max)?;
    let mut r = Report::table(&["point", "hits", "largest_n"]);
    for h in &hits {
        r.row(vec![
            h.point.iter().map(|&c| num(c)).collect::<Vec<_>>().join(" "),
            h.hits.to_string(),
            h.largest_n.map_or(String::new(), |n| n.to_string()),
        ]);
    }
    r.set("hit_fraction", jnum(hit_fraction(&hits)));
    Ok(r)
}

pub fn band(a: &BandArgs) -> CliResult<Report> {
    let b = growth_band_check(a.x, a.y, a.n_max)?;
    let mut r = Report::table(&["x", "y", "n_max", "c_lower", "c_upper", "argmin_n", "argmax_n"]);
    r.row(vec![
        num(b.x),
        num(b.y),
        b.n_max.to_string(),
        num(b.c_lower),
        num(b.c_upper),
        b.argmin_n.to_string(),
        b.argmax_n.to_string(),
    ]);
    r.set("c_lower", jnum(b.c_lower));
    r.set("c_upper", jnum(b.c_upper));
    Ok(r)
}

pub fn psi(a: &PsiArgs) -> CliResult<Report> {
    let c = psi_distribution(a.n, a.grid)?;
    let mut r = Report::table(&["alpha", "tail"]);
    for (al, t) in c.alphas.iter().zip(&c.tail) {
        r.row(vec![num(*al), num(*t)]);
    }
    r.set("points", c.alphas.len());
    Ok(r)
}

pub fn cf(a: &CfArgs) -> CliResult<Report> {
    let e = cf_expand(a.x, a.depth)?;
    let mut r = Report::table(&["k", "quotient", "p", "q", "reliable"]);
    for (k, (q, (pk, qk))) in e.quotients.iter().zip(&e.convergents).enumerate() {
        r.row(vec![
            (k + 1).to_string(),
            q.to_string(),
            pk.to_string(),
            qk.to_string(),
            (k < e.reliable_depth).to_string(),
        ]);
    }
    r.set("reliable_depth", e.reliable_depth);
    Ok(r)
}

pub fn boxdim(a: &BoxdimArgs) -> CliResult<Report> {
    let mut rdr = csv::Reader::from_path(&a.input)?;
    let headers = rdr.headers()?.clone();
    let cols: Vec<usize> = match &a.columns {
        None => (0..headers.len()).collect(),
        Some(list) => list
            .split(',')
            .map(|name| {
                headers
                    .iter()
                    .position(|h| h == name.trim())
                    .ok_or_else(|| usage(format!("column `{name}` not in {:?}", headers.iter().collect::<Vec<_>>())))
            })
            .collect::<CliResult<_>>()?,
    };
    let mut pts = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let p = cols
            .iter()
            .map(|&c| {
                rec.get(c)
                    .and_then(|v| v.trim().parse::<f64>().ok())
                    .ok_or_else(|| usage(format!("row {}: column {c} is not a number", line + 2)))
            })
            .collect::<CliResult<Vec<f64>>>()?;
        pts.push(p);
    }
    let b = box_count(&pts, a.k_min, a.k_max)?;
    let mut r = Report::table(&["k", "count"]);
    for (k, c) in b.scales.iter().zip(&b.counts) {
        r.row(vec![k.to_string(), c.to_string()]);
    }
    r.set("points", pts.len());
    r.set("slope", jnum(b.slope));
    r.set("r2", jnum(b.r2));
    Ok(r)
}

fn realization(src: &RealizationArgs) -> CliResult<CantorRealization> {
    match (&src.realization, src.depth) {
        (Some(path), _) => Ok(CantorRealization::from_text(&std::fs::read_to_string(path)?)?),
        (None, Some(depth)) => Ok(cantor_sample(depth, src.seed.unwrap_or(0))?),
        (None, None) => Err(usage("give --realization FILE or --depth (with optional --seed)")),
    }
}

pub fn cantor(c: &CantorCommand) -> CliResult<Report> {
    match c {
        CantorCommand::Sample(a) => {
            let real = cantor_sample(a.depth, a.seed)?;
            let mut r = Report::default();
            r.set("kept_count", real.kept_count());
            r.set("digits", real.removals.len());
            r.text = Some(real.to_text());
            Ok(r)
        }
        CantorCommand::Measure(a) => {
            let real = realization(&a.source)?;
            let rect: Rect = parse(&a.rect)?;
            let m = cantor_measure(&real, &rect);
            let mut r = Report::table(&["rect", "depth", "measure", "exact", "area"]);
            let exact = if a.exact {
                cantor_measure_exact(&real, &RationalRect::from_rect(&rect)).to_string()
            } else {
                String::new()
            };
            r.row(vec![a.rect.clone(), real.depth.to_string(), num(m), exact.clone(), num(rect.area())]);
            r.set("measure", jnum(m));
            if a.exact {
                r.set("measure_exact", exact);
            }
            Ok(r)
        }
        CantorCommand::Expectation(a) => {
            let rect: Rect = parse(&a.rect)?;
            let e = cantor_expectation_test(&rect, a.depth, a.trials, a.seed)?;
            let mut r = Report::table(&["rect", "depth", "trials", "mean", "stderr", "lebesgue_area", "z"]);
            let z = if e.stderr > 0.0 { (e.mean - e.lebesgue_area) / e.stderr } else { 0.0 };
            r.row(vec![
                a.rect.clone(),
                e.depth.to_string(),
                e.trials.to_string(),
                num(e.mean),
                num(e.stderr),
                num(e.lebesgue_area),
                num(z),
            ]);
            r.set("mean", jnum(e.mean));
            r.set("stderr", jnum(e.stderr));
            r.set("within_3_sigma", (e.mean - e.lebesgue_area).abs() <= 3.0 * e.stderr);
            Ok(r)
        }
        CantorCommand::Draw(a) => {
            let real = realization(&a.source)?;
            let pts = cantor_draw(&real, a.draw_seed, a.count)?;
            let mut r = Report::table(&["x", "y"]);
            for (x, y) in pts {
                r.row(vec![num(x), num(y)]);
            }
            r.set("depth", real.depth);
            Ok(r)
        }
        CantorCommand::WeylStat(a) => {
            let forced: Vec<(f64, f64)> = match &a.force {
                None => Vec::new(),
                Some(s) => s
                    .split(';')
                    .map(|p| match parse_reals(p, "force")?.as_slice() {
                        &[x, y] => Ok((x, y)),
                        _ => Err(usage(format!("forced point `{p}` needs two coordinates"))),
                    })
                    .collect::<CliResult<_>>()?,
            };
            let table = cantor_weyl_statistic(a.depth, a.realizations, a.per_realization, a.n_max, a.seed, &forced)?;
            let mut r = Report::table(&["g", "count", "min", "q1", "median", "q3", "max"]);
            for s in &table {
                r.row(vec![
                    s.g.to_string(),
                    s.count.to_string(),
                    num(s.min),
                    num(s.q1),
                    num(s.median),
                    num(s.q3),
                    num(s.max),
                ]);
            }
            r.set("samples", table.first().map_or(0, |s| s.count));
            Ok(r)
        }
    }
}
