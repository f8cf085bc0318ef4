use std::cell::RefCell;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use ridgesplit::calculus::{SampleGrid, MIN_GRID_NODES};
use ridgesplit::decompose::{decompose as run_decompose, representability_defect, DecomposeOptions};
use ridgesplit::format::number;
use ridgesplit::geometry::{parse_directions, validate_directions, GeometryError};
use ridgesplit::pde::{corollary_check, parse_profiles, plane_wave_solution, verify_solution, PlaneWaveOperator};
use ridgesplit::{read_decomposition, write_decomposition, BivariateFunction, Decomposition, Method};
use serde_json::json;

use crate::input::{self, default_square};
use crate::report::{emit_record, CliError, EXIT_DEFECT, EXIT_FAILED, EXIT_OK};
use crate::{CheckDirsArgs, DecomposeArgs, PdeSolveArgs, PdeVerifyArgs, RidgeDefectArgs, VerifyArgs};

/// Fresh check grid used by `verify` when none is given.
const VERIFY_GRID: usize = 137;

fn with_smoothness(f: BivariateFunction, k: Option<u32>) -> BivariateFunction {
    match k {
        Some(k) => f.with_smoothness(k),
        None => f,
    }
}

pub fn check_dirs(args: &CheckDirsArgs) -> Result<u8, CliError> {
    let dirs = parse_directions(&args.dirs)?;
    let mut pairs = Vec::new();
    for i in 0..dirs.len() {
        for j in i + 1..dirs.len() {
            let cross = dirs[i].normalized_cross(dirs[j]);
            println!("pair ({i}, {j}): normalized cross {}", number(cross));
            pairs.push(json!({ "i": i, "j": j, "cross": if cross.is_finite() { cross } else { 0.0 } }));
        }
    }
    match validate_directions(&dirs, args.tol_indep) {
        Ok(_) => {
            println!("{} directions, pairwise independent", dirs.len());
            emit_record("check-dirs", "ok", json!({ "valid": true, "count": dirs.len(), "pairs": pairs }));
            Ok(EXIT_OK)
        }
        Err(e @ (GeometryError::DependentPair { .. } | GeometryError::ZeroVector { .. })) => {
            println!("invalid: {e}");
            let offending = match e {
                GeometryError::DependentPair { i, j, .. } => json!([i, j]),
                GeometryError::ZeroVector { index } => json!([index]),
                _ => unreachable!(),
            };
            emit_record(
                "check-dirs",
                "invalid",
                json!({ "valid": false, "count": dirs.len(), "pairs": pairs, "offending": offending, "message": e.to_string() }),
            );
            Ok(EXIT_FAILED)
        }
        Err(e) => Err(e.into()),
    }
}

pub fn decompose(args: &DecomposeArgs) -> Result<u8, CliError> {
    input::check_grid("--grid", args.grid, MIN_GRID_NODES)?;
    let f = input::load_function(args.source.expr.as_deref(), args.source.samples.as_deref())?;
    let f = with_smoothness(f, args.smoothness);
    let domain = input::domain_for(args.domain.as_deref(), &f)?;
    let method = input::method_for(args.method.map(Method::from), &f)?;
    let ds = input::directions(&args.dirs, args.tol_indep)?;

    let mut opts = DecomposeOptions::new(method, args.grid);
    opts.axis_pair = args.axis_pair.as_deref().map(input::axis_pair).transpose()?;
    opts.stage_tol = args.stage_tol;
    opts.diff.allow_high_order_on_samples = args.allow_high_order_fd;

    let dec = run_decompose(&f, &ds, &domain, &opts)?;
    write_decomposition(&args.out, &dec)?;
    if let Some(dir) = &args.emit_plot_data {
        emit_plot_data(dir, &dec, &f)?;
    }

    println!("directions: {}", dec.directions.len());
    println!("reconstruction_sup_error: {}", number(dec.reconstruction_sup_error));
    println!("separation_defect: {}", number(dec.separation_defect));
    println!("wrote {}", args.out.display());
    emit_record(
        "decompose",
        "ok",
        json!({
            "out": args.out.display().to_string(),
            "method": method,
            "directions": dec.directions.len(),
            "grid": args.grid,
            "verify_grid": dec.metadata.verify_n,
            "reconstruction_sup_error": dec.reconstruction_sup_error,
            "separation_defect": dec.separation_defect,
        }),
    );
    Ok(EXIT_OK)
}

fn emit_plot_data(dir: &Path, dec: &Decomposition, f: &BivariateFunction) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    for (i, p) in dec.profiles.iter().enumerate() {
        let mut w = BufWriter::new(fs::File::create(dir.join(format!("profile_{i}.dat")))?);
        writeln!(w, "# t value")?;
        for (t, v) in p.nodes().zip(p.values()) {
            writeln!(w, "{} {}", number(t), number(*v))?;
        }
        w.flush()?;
    }
    let sum = dec.ridge_sum();
    let mut w = BufWriter::new(fs::File::create(dir.join("surface.dat"))?);
    writeln!(w, "# x y F reconstruction error")?;
    for p in dec.domain.grid(dec.metadata.verify_n) {
        let fv = f.eval_at(p)?;
        let rv = sum.eval(p)?;
        writeln!(
            w,
            "{} {} {} {} {}",
            number(p[0]),
            number(p[1]),
            number(fv),
            number(rv),
            number((fv - rv).abs())
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn verify(args: &VerifyArgs) -> Result<u8, CliError> {
    let dec = read_decomposition(&args.decomposition)?;
    let stored = dec.metadata.verify_n;
    let grid = match args.grid {
        Some(n) if n == stored => {
            return Err(CliError::input(format!(
                "--grid {n} is the grid the decomposition was checked on; pick another"
            )))
        }
        Some(n) => n,
        None if stored == VERIFY_GRID => VERIFY_GRID + 2,
        None => VERIFY_GRID,
    };
    input::check_grid("--grid", grid, 2)?;
    let f = match (&args.source.expr, &args.source.samples) {
        (None, None) => match &dec.source_expression {
            Some(text) => BivariateFunction::parse(text).map_err(|e| CliError::input(format!("stored expression: {e}")))?,
            None => return Err(CliError::input("the file stores no expression; give --f or --samples")),
        },
        (expr, samples) => input::load_function(expr.as_deref(), samples.as_deref())?,
    };

    let points = dec.domain.grid(grid);
    let sup_f = f.sup_over(&points)?;
    let err = dec.sup_error_against(&f, grid)?;
    let relative = err / (1.0 + sup_f);
    let passed = relative <= args.tol;

    println!("grid: {grid}x{grid} (stored {stored}x{stored})");
    println!("sup_error: {}", number(err));
    println!("relative_error: {}", number(relative));
    println!("{}", if passed { "PASS" } else { "FAIL" });
    emit_record(
        "verify",
        if passed { "ok" } else { "failed" },
        json!({
            "grid": grid,
            "stored_grid": stored,
            "sup_error": err,
            "relative_error": relative,
            "tol": args.tol,
            "passed": passed,
        }),
    );
    Ok(if passed { EXIT_OK } else { EXIT_FAILED })
}

pub fn ridge_defect(args: &RidgeDefectArgs) -> Result<u8, CliError> {
    input::check_grid("--grid", args.grid, 2)?;
    let f = input::load_function(args.source.expr.as_deref(), args.source.samples.as_deref())?;
    let domain = input::domain_for(args.domain.as_deref(), &f)?;
    let ds = input::directions(&args.dirs, args.tol_indep)?;
    let deltas = input::number_list("--deltas", &args.deltas)?;

    let defect = representability_defect(&f, &ds, &deltas, &domain, args.grid)?;
    let sup_f = f.sup_over(&domain.grid(args.grid))?;
    let threshold = args.tol * (1.0 + sup_f);
    let ok = defect <= threshold;

    println!("increment_defect: {}", number(defect));
    println!("threshold: {}", number(threshold));
    println!("{}", if ok { "consistent with a ridge sum" } else { "not a ridge sum along these directions" });
    emit_record(
        "ridge-defect",
        if ok { "ok" } else { "defect" },
        json!({ "defect": defect, "threshold": threshold, "grid": args.grid }),
    );
    Ok(if ok { EXIT_OK } else { EXIT_DEFECT })
}

pub fn pde_verify(args: &PdeVerifyArgs) -> Result<u8, CliError> {
    input::check_grid("--grid", args.grid, 2)?;
    let op = PlaneWaveOperator::parse(&args.factors)?;
    let u = input::load_function(args.source.expr.as_deref(), args.source.samples.as_deref())
        .map_err(|e| CliError { message: e.message.replace("--f", "--u"), ..e })?;
    let u = with_smoothness(u, args.smoothness);
    let domain = input::domain_for(args.domain.as_deref(), &u)?;
    let method = input::method_for(args.method.map(Method::from), &u)?;

    let mut fields = json!({ "order": op.order(), "method": method, "grid": args.grid, "tol": args.tol });
    let report = if args.corollary {
        input::check_grid("--decompose-grid", args.decompose_grid, MIN_GRID_NODES)?;
        let mut opts = DecomposeOptions::new(method, args.decompose_grid);
        opts.verify_n = args.grid;
        let rep = corollary_check(&op, &u, &domain, &opts, args.tol)?;
        if let Some(w) = &rep.smoothness_warning {
            eprintln!("warning: {w}");
        }
        println!(
            "decomposition: reconstruction_sup_error {}",
            number(rep.decomposition.reconstruction_sup_error)
        );
        fields["reconstruction_sup_error"] = json!(rep.decomposition.reconstruction_sup_error);
        fields["smoothness_warning"] = json!(rep.smoothness_warning);
        rep.verification
    } else {
        verify_solution(&op, &u, &domain, args.grid, args.tol, method)?
    };

    println!("max_residual: {}", number(report.max_residual));
    println!("threshold: {}", number(report.threshold));
    println!("{}", if report.passed { "PASS" } else { "FAIL" });
    fields["max_residual"] = json!(report.max_residual);
    fields["max_abs_u"] = json!(report.max_abs_u);
    fields["threshold"] = json!(report.threshold);
    fields["passed"] = json!(report.passed);
    fields["corollary"] = json!(args.corollary);
    emit_record("pde verify", if report.passed { "ok" } else { "failed" }, fields);
    Ok(if report.passed { EXIT_OK } else { EXIT_FAILED })
}

pub fn pde_solve(args: &PdeSolveArgs) -> Result<u8, CliError> {
    input::check_grid("--grid", args.grid, 2)?;
    let op = PlaneWaveOperator::parse(&args.factors)?;
    let u = plane_wave_solution(&op, &parse_profiles(&args.profiles)?)?;
    let domain = match &args.domain {
        Some(t) => ridgesplit::geometry::parse_rect(t)?,
        None => default_square(),
    };

    let failure = RefCell::new(None);
    let grid = SampleGrid::from_fn(domain, args.grid, args.grid, |x, y| {
        u.eval(x, y).unwrap_or_else(|e| {
            failure.borrow_mut().get_or_insert(e);
            f64::NAN
        })
    });
    if let Some(e) = failure.into_inner() {
        return Err(e.into());
    }
    let mut w = BufWriter::new(fs::File::create(&args.out)?);
    grid.write_csv(&mut w)?;
    w.flush()?;

    let expression = u.expr().map(|e| e.to_string()).unwrap_or_default();
    println!("u(x, y) = {expression}");
    println!("wrote {} ({}x{} samples)", args.out.display(), args.grid, args.grid);
    emit_record(
        "pde solve",
        "ok",
        json!({ "out": args.out.display().to_string(), "grid": args.grid, "u": expression }),
    );
    Ok(EXIT_OK)
}
