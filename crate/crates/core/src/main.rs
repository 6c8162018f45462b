use clap::{Args, Parser, Subcommand};
use newton_rays::angle::Angle;
use newton_rays::bottcher::chart_at_root;
use newton_rays::classify::{classify_per2, classify_type, Region, TypeLabel};
use newton_rays::curves::{cut_angles, CubicSetting};
use newton_rays::degeneration::{
    convergence_experiment, critical_escape_check, family_limit, per2_poly, ComponentPath, FamilyKind,
    FamilySpec, GammaSpec, Tolerances,
};
use newton_rays::error::{Error, Result};
use newton_rays::graph::{newton_graph, superattracting_roots};
use newton_rays::newton::{newton_from_poly, MapRep};
use newton_rays::poly::Poly;
use newton_rays::rays::{trace_ray, RayOptions};
use newton_rays::render::{render_dynamical, render_parameter, Image, TypeGrid, TYPE_PALETTE};
use newton_rays::sphere::SpherePoint;
use num_complex::Complex64;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const OUT_DIR_ENV: &str = "NEWTON_RAYS_OUT_DIR";

const PALETTE_HELP: &str = "\
Palettes (fixed):
  render-dyn  root basins by root index: 1 red, 2 blue, 3 green, 4 yellow,
              5 purple, 6 teal, 7 orange, 8 grey (then repeating); free-cycle
              basins in dark tones by cycle point; immediate components at full
              strength, other components at 62%; unresolved black; rays white.
  render-par  A red, B orange, C yellow, D green, IE blue, FE1 purple,
              FE2 cyan, unresolved near-black.
Label grid (.labels): the bytes NRLABEL1, a little-endian u32 header length,
a JSON header {region, resolution, budget, legend}, then one byte per pixel
in row-major order: A=0 B=1 C=2 D=3 IE=4 FE1=5 FE2=6 unresolved=7.

Polynomials: z3m1, fig2-cubic, per2:<c>, quartic-escape:<R>, or ascending
coefficients separated by commas, e.g. \"-1,0,0,1\" for z^3-1.
Complex numbers are written 1.5, -2i or 0.1-0.3i.

Exit codes: 0 success, 1 invalid input, 2 numerical failure or failed
hypothesis, 3 indeterminate result (only with --strict).";

#[derive(Parser, Debug)]
#[command(name = "newton-rays", version, about = "Newton maps, internal rays and ray graphs", after_help = PALETTE_HELP)]
struct Cli {
    /// Worker threads (output does not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Exit with code 3 when the result contains indeterminate verdicts.
    #[arg(long, global = true)]
    strict: bool,
    /// Directory for relative output paths [env: NEWTON_RAYS_OUT_DIR].
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug, Clone)]
struct PolyArg {
    /// Polynomial preset or ascending coefficient list.
    #[arg(long = "poly", allow_hyphen_values = true)]
    poly: String,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Build the Newton map and report roots, poles and critical points.
    Map {
        #[command(flatten)]
        p: PolyArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Trace one internal ray of an immediate basin.
    TraceRay {
        #[command(flatten)]
        p: PolyArg,
        /// Root index, 1-based.
        #[arg(long, default_value_t = 1)]
        root: usize,
        #[arg(long)]
        angle: String,
        #[arg(long)]
        no_refine: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Newton graph of a given level (JSON, or DOT when the output ends in .dot).
    Graph {
        #[command(flatten)]
        p: PolyArg,
        #[arg(long, default_value_t = 0)]
        level: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Angles whose rays in two root basins co-land.
    CutAngles {
        #[command(flatten)]
        p: PolyArg,
        /// 1-based root indices.
        #[arg(long, default_value = "1,2")]
        pair: String,
        #[arg(long, default_value_t = 256)]
        qmax: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Separating curve through the second preimage components of a cubic.
    CurveC {
        #[command(flatten)]
        p: PolyArg,
        #[arg(long, default_value_t = 256)]
        qmax: u64,
        /// Fix the angle instead of searching (needs --k).
        #[arg(long)]
        theta: Option<String>,
        #[arg(long)]
        k: Option<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Graph convergence for a degenerating family.
    Converge {
        #[arg(long, default_value = "quartic-escape")]
        family: String,
        #[arg(long = "R", aliases = ["r", "param"], value_delimiter = ',', allow_hyphen_values = true)]
        params: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "0,1/2")]
        angles: Vec<String>,
        #[arg(long, default_value_t = 200)]
        orbit_budget: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check that the free critical point stays near infinity.
    EscapeCheck {
        #[arg(long, default_value = "quartic-escape")]
        family: String,
        #[arg(long = "R", aliases = ["r", "param"], value_delimiter = ',', allow_hyphen_values = true)]
        params: Vec<String>,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
    },
    /// Hyperbolic type of a quartic Newton map.
    Classify {
        /// Parameter of the period-two slice.
        #[arg(long, allow_hyphen_values = true, conflicts_with = "poly")]
        c: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        poly: Option<String>,
        #[arg(long, default_value_t = 500)]
        budget: usize,
    },
    /// Basin picture of the dynamical plane.
    RenderDyn {
        #[command(flatten)]
        p: PolyArg,
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        center: String,
        #[arg(long, default_value_t = 4.0)]
        width: f64,
        #[arg(long)]
        height: Option<f64>,
        #[arg(long, default_value_t = 512)]
        res: usize,
        /// Overlay the Newton graph of this level.
        #[arg(long)]
        overlay_level: Option<usize>,
        #[arg(long, default_value_t = 200)]
        budget: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Type map of the period-two slice; writes the image and a .labels grid.
    RenderPar {
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        center: String,
        #[arg(long, default_value_t = 4.0)]
        width: f64,
        #[arg(long)]
        height: Option<f64>,
        #[arg(long, default_value_t = 512)]
        res: usize,
        #[arg(long, default_value_t = 500)]
        budget: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_complex(s: &str) -> Result<Complex64> {
    let bad = || Error::invalid(format!("cannot parse complex number {s:?}"));
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        return Err(bad());
    }
    let Some(body) = t.strip_suffix('i') else {
        return Ok(Complex64::new(t.parse().map_err(|_| bad())?, 0.0));
    };
    // split at the last sign that is not part of an exponent
    let b = body.as_bytes();
    let cut = (1..b.len()).rev().find(|&k| (b[k] == b'+' || b[k] == b'-') && !matches!(b[k - 1], b'e' | b'E'));
    let (re, im) = match cut {
        Some(k) => (&body[..k], &body[k..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => "1",
        "-" => "-1",
        x => x,
    };
    let re: f64 = re.parse().map_err(|_| bad())?;
    let im: f64 = im.parse().map_err(|_| bad())?;
    if !(re.is_finite() && im.is_finite()) {
        return Err(bad());
    }
    Ok(Complex64::new(re, im))
}

fn parse_poly(s: &str) -> Result<Poly> {
    let t = s.trim();
    if let Some(c) = t.strip_prefix("per2:") {
        return Ok(per2_poly(parse_complex(c)?));
    }
    if let Some(r) = t.strip_prefix("quartic-escape:") {
        let r = parse_complex(r)?;
        return Ok(Poly::from_real(&[-1.0, 0.0, 0.0, 1.0]).mul(&Poly::linear_root(r)));
    }
    match t {
        "z3m1" => Ok(Poly::from_real(&[-1.0, 0.0, 0.0, 1.0])),
        "fig2-cubic" => Ok(Poly::from_real(&[1.0, 0.0, -0.5, 1.0 / 3.0])),
        _ => {
            let c = t.split(',').map(parse_complex).collect::<Result<Vec<_>>>()?;
            let p = Poly::new(c);
            if p.degree() < 2 {
                return Err(Error::invalid("polynomial must have degree at least 2"));
            }
            Ok(p)
        }
    }
}

fn parse_family(s: &str) -> Result<FamilyKind> {
    match s {
        "quartic-escape" => Ok(FamilyKind::cube_roots_of_unity()),
        "cubic-perturb" => Ok(FamilyKind::CubicPerturb),
        "per2" => Ok(FamilyKind::Per2Slice),
        _ => Err(Error::invalid(format!("unknown family {s:?}"))),
    }
}

fn parse_sweep(kind: &FamilyKind, params: &[String]) -> Result<Vec<FamilySpec>> {
    if params.is_empty() {
        return Err(Error::invalid("no parameters given"));
    }
    params.iter().map(|p| Ok(FamilySpec::new(kind.clone(), parse_complex(p)?))).collect()
}

fn parse_region(center: &str, width: f64, height: Option<f64>) -> Result<Region> {
    Region::new(parse_complex(center)?, width, height.unwrap_or(width))
}

fn check_res(res: usize) -> Result<()> {
    if res == 0 || res > 16384 {
        return Err(Error::invalid(format!("resolution {res} out of range 1..=16384")));
    }
    Ok(())
}

fn build_map(spec: &str) -> Result<MapRep> {
    newton_from_poly(&parse_poly(spec)?)
}

fn pt(p: SpherePoint) -> Value {
    json!(p)
}

struct Ctx {
    out_dir: Option<PathBuf>,
    config: Value,
    written: Vec<String>,
    indeterminate: bool,
}

impl Ctx {
    fn resolve(&self, p: &Path) -> PathBuf {
        match &self.out_dir {
            Some(d) if p.is_relative() => d.join(p),
            _ => p.to_path_buf(),
        }
    }

    /// Write via a temporary sibling and rename.
    fn write(&mut self, p: &Path, bytes: &[u8]) -> Result<()> {
        let p = self.resolve(p);
        let io = |e: std::io::Error| Error::invalid(format!("cannot write {}: {e}", p.display()));
        if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(io)?;
        }
        let name = p.file_name().ok_or_else(|| Error::invalid("output path has no file name"))?;
        let tmp = p.with_file_name(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
        std::fs::write(&tmp, bytes).map_err(io)?;
        std::fs::rename(&tmp, &p).map_err(io)?;
        self.written.push(p.display().to_string());
        Ok(())
    }

    fn write_json(&mut self, p: &Path, body: Value) -> Result<()> {
        let doc = json!({ "config": self.config, "result": body });
        let mut s = serde_json::to_string_pretty(&doc).expect("json");
        s.push('\n');
        self.write(p, s.as_bytes())
    }

    fn write_image(&mut self, p: &Path, img: &Image) -> Result<()> {
        let note = self.config.to_string();
        let bytes = match p.extension().and_then(|e| e.to_str()) {
            Some("png") => img.to_png_with(Some(&note))?,
            _ => img.to_ppm_with(Some(&note)),
        };
        self.write(p, &bytes)
    }
}

fn run(cmd: &Cmd, ctx: &mut Ctx) -> Result<Value> {
    match cmd {
        Cmd::Map { p, out } => {
            let m = build_map(&p.poly)?;
            let fixed: Vec<Value> = m
                .fixed_points()?
                .iter()
                .map(|f| json!({"point": pt(f.point), "multiplier": [f.multiplier.re, f.multiplier.im], "kind": f.kind}))
                .collect();
            let crit: Vec<Value> =
                m.critical_points()?.iter().map(|c| json!({"point": pt(c.point), "order": c.order})).collect();
            let poles: Vec<Value> = m.poles()?.iter().map(|(p, k)| json!({"point": pt(*p), "order": k})).collect();
            let body = json!({
                "map": m.to_json(&[]),
                "degree": m.degree,
                "fixed_points": fixed,
                "critical_points": crit,
                "poles": poles,
            });
            if let Some(o) = out {
                ctx.write_json(o, body.clone())?;
            }
            Ok(body)
        }
        Cmd::TraceRay { p, root, angle, no_refine, out } => {
            let m = build_map(&p.poly)?;
            let a: Angle = angle.parse()?;
            let roots = superattracting_roots(&m)?;
            let r = *roots
                .get(root.wrapping_sub(1))
                .ok_or_else(|| Error::invalid(format!("root index {root} out of range 1..={}", roots.len())))?;
            let ch = chart_at_root(&m, r)?;
            let opts = RayOptions { refine: !no_refine, ..RayOptions::default() };
            let ray = trace_ray(&ch, a, &opts)?;
            let j = serde_json::to_value(ray.to_json()).expect("json");
            if !matches!(j["status"].as_str(), Some("landed")) {
                ctx.indeterminate = true;
            }
            if let Some(o) = out {
                ctx.write_json(o, j.clone())?;
            }
            Ok(json!({"status": j["status"], "landing": j["landing"], "samples": ray.samples.len()}))
        }
        Cmd::Graph { p, level, out } => {
            let m = build_map(&p.poly)?;
            let g = newton_graph(&m, *level)?;
            if !g.warnings.is_empty() {
                ctx.indeterminate = true;
            }
            let gj = serde_json::to_value(g.to_json()).expect("json");
            if let Some(o) = out {
                if o.extension().and_then(|e| e.to_str()) == Some("dot") {
                    let dot = format!("// config: {}\n{}", ctx.config, g.to_dot());
                    ctx.write(o, dot.as_bytes())?;
                } else {
                    ctx.write_json(o, gj.clone())?;
                }
            }
            Ok(json!({
                "rays": g.rays.len(),
                "vertices": g.vertices.len(),
                "edges": g.incidence.len(),
                "connected": g.is_connected(),
                "warnings": g.warnings,
            }))
        }
        Cmd::CutAngles { p, pair, qmax, out } => {
            let m = build_map(&p.poly)?;
            let ix: Vec<usize> = pair
                .split(',')
                .map(|s| s.trim().parse::<usize>().ok().filter(|&k| k >= 1).map(|k| k - 1))
                .collect::<Option<_>>()
                .filter(|v: &Vec<usize>| v.len() == 2 && v[0] != v[1])
                .ok_or_else(|| Error::invalid(format!("bad root pair {pair:?}")))?;
            if *qmax < 2 {
                return Err(Error::invalid("qmax must be at least 2"));
            }
            let set = cut_angles(&m, (ix[0], ix[1]), *qmax)?;
            if !set.indeterminate.is_empty() {
                ctx.indeterminate = true;
            }
            let body = serde_json::to_value(&set).expect("json");
            if let Some(o) = out {
                ctx.write_json(o, body.clone())?;
            }
            Ok(json!({
                "members": set.members.len(),
                "indeterminate": set.indeterminate.len(),
                "alpha_estimate": set.alpha_estimate,
            }))
        }
        Cmd::CurveC { p, qmax, theta, k, out } => {
            let m = build_map(&p.poly)?;
            let mut s = CubicSetting::new(&m)?;
            let (t, k) = match (theta, k) {
                (Some(t), Some(k)) => (t.parse::<Angle>()?, *k),
                (None, None) => {
                    let set = s.cut_angles(*qmax)?;
                    s.choose_theta(&set)
                        .ok_or_else(|| Error::hypothesis("no admissible cut angle up to the denominator bound"))?
                }
                _ => return Err(Error::invalid("--theta and --k go together")),
            };
            let g = s.c_curve(t, k)?;
            let inside = [("xi1", s.xi1), ("xi2", s.xi2), ("c", s.c)]
                .iter()
                .map(|(n, p)| Ok((n.to_string(), Value::Bool(CubicSetting::encloses(&g, *p)?))))
                .collect::<Result<serde_json::Map<String, Value>>>();
            let inside = match inside {
                Ok(v) => Value::Object(v),
                Err(e @ Error::Indeterminate(_)) => {
                    ctx.indeterminate = true;
                    json!({"indeterminate": e.to_string()})
                }
                Err(e) => return Err(e),
            };
            let body = json!({"theta": t, "k": k, "graph": g.to_json(), "enclosed": inside});
            if let Some(o) = out {
                ctx.write_json(o, body.clone())?;
            }
            Ok(json!({"theta": t, "k": k, "rays": g.rays.len(), "single_cycle": g.is_single_cycle(), "enclosed": body["enclosed"]}))
        }
        Cmd::Converge { family, params, angles, orbit_budget, out } => {
            let kind = parse_family(family)?;
            let sweep = parse_sweep(&kind, params)?;
            let angles = angles.iter().map(|a| a.parse()).collect::<Result<Vec<Angle>>>()?;
            let limit = family_limit(&kind)?;
            let n = match &kind {
                FamilyKind::QuarticRootEscape { base } => base.len(),
                _ => superattracting_roots(&limit.reduction)?.len(),
            };
            let gamma = GammaSpec { components: (0..n).map(|root| ComponentPath { root, pullbacks: vec![] }).collect(), angles };
            let tol = Tolerances { orbit_budget: *orbit_budget, ..Tolerances::default() };
            let rep = convergence_experiment(&sweep, &limit, &gamma, tol)?;
            if rep.rows.iter().any(|r| r.iso.is_none()) {
                ctx.indeterminate = true;
            }
            if let Some(o) = out {
                let csv = format!("# config: {}\n{}", ctx.config, rep.to_csv());
                ctx.write(o, csv.as_bytes())?;
            }
            Ok(serde_json::to_value(&rep).expect("json"))
        }
        Cmd::EscapeCheck { family, params, k, eps } => {
            let kind = parse_family(family)?;
            if eps.is_nan() || *eps <= 0.0 {
                return Err(Error::invalid("eps must be positive"));
            }
            let res = critical_escape_check(&parse_sweep(&kind, params)?, *k, *eps)?;
            let all = res.iter().all(|r| r.1);
            Ok(json!({
                "pass": all,
                "results": res.iter().map(|(p, ok)| json!({"parameter": [p.re, p.im], "pass": ok})).collect::<Vec<_>>(),
            }))
        }
        Cmd::Classify { c, poly, budget } => {
            let label = match (c, poly) {
                // degenerate slice parameters are masked, as in the renders
                (Some(c), None) => classify_per2(parse_complex(c)?, *budget),
                (None, Some(p)) => match classify_type(&build_map(p)?, *budget) {
                    Ok(l) => l,
                    Err(e @ Error::InvalidInput(_)) => return Err(e),
                    Err(_) => TypeLabel::Unresolved,
                },
                _ => return Err(Error::invalid("give exactly one of --c and --poly")),
            };
            if label == TypeLabel::Unresolved {
                ctx.indeterminate = true;
            }
            Ok(json!({"type": label.to_string(), "code": label.code()}))
        }
        Cmd::RenderDyn { p, center, width, height, res, overlay_level, budget, out } => {
            check_res(*res)?;
            let m = build_map(&p.poly)?;
            let region = parse_region(center, *width, *height)?;
            let rows = ((*res as f64) * region.height / region.width).round().max(1.0) as usize;
            let overlays = match overlay_level {
                Some(l) => vec![newton_graph(&m, *l)?],
                None => vec![],
            };
            let (img, grid) = render_dynamical(&m, region, (*res, rows), &overlays, *budget)?;
            let unresolved = grid.labels.iter().filter(|l| l.component == u32::MAX).count();
            if unresolved > 0 {
                ctx.indeterminate = true;
            }
            ctx.write_image(out, &img)?;
            Ok(json!({"resolution": [res, rows], "cycles": grid.cycles.len(), "unresolved_pixels": unresolved}))
        }
        Cmd::RenderPar { center, width, height, res, budget, out } => {
            check_res(*res)?;
            let region = parse_region(center, *width, *height)?;
            let rows = ((*res as f64) * region.height / region.width).round().max(1.0) as usize;
            let (img, grid) = render_parameter(region, (*res, rows), *budget)?;
            ctx.write_image(out, &img)?;
            ctx.write(&out.with_extension("labels"), &grid.to_bytes())?;
            let counts: serde_json::Map<String, Value> =
                TypeLabel::ALL.iter().map(|&l| (l.to_string(), json!(grid.count(l)))).collect();
            if grid.count(TypeLabel::Unresolved) > 0 {
                ctx.indeterminate = true;
            }
            Ok(json!({"resolution": [res, rows], "counts": counts, "legend": TypeGrid::legend(), "palette": TYPE_PALETTE}))
        }
    }
}

/// Print the summary; a closed pipe is not an error.
fn emit(v: &Value) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(v).expect("json"));
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 || rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            eprintln!("error: invalid input: cannot use {n} threads");
            return ExitCode::from(1);
        }
    }
    let out_dir = cli.out_dir.clone().or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from));
    let config = json!({
        "command": format!("{:?}", cli.cmd),
        "strict": cli.strict,
        "version": env!("CARGO_PKG_VERSION"),
    });
    let mut ctx = Ctx { out_dir, config, written: Vec::new(), indeterminate: false };
    match run(&cli.cmd, &mut ctx) {
        Ok(result) => {
            let summary = json!({
                "ok": true,
                "config": ctx.config,
                "outputs": ctx.written,
                "indeterminate": ctx.indeterminate,
                "result": result,
            });
            emit(&summary);
            if cli.strict && ctx.indeterminate {
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            let summary = json!({"ok": false, "config": ctx.config, "error": e.to_string(), "exit_code": e.exit_code()});
            emit(&summary);
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_literals() {
        assert_eq!(parse_complex("0+0i").unwrap(), Complex64::new(0.0, 0.0));
        assert_eq!(parse_complex("-0.1+0.1i").unwrap(), Complex64::new(-0.1, 0.1));
        assert_eq!(parse_complex("2i").unwrap(), Complex64::new(0.0, 2.0));
        assert_eq!(parse_complex("-i").unwrap(), Complex64::new(0.0, -1.0));
        assert_eq!(parse_complex("1e-3-2e+1i").unwrap(), Complex64::new(1e-3, -20.0));
        assert_eq!(parse_complex("100").unwrap(), Complex64::new(100.0, 0.0));
        assert!(parse_complex("x").is_err());
        assert!(parse_complex("").is_err());
    }

    #[test]
    fn presets() {
        assert_eq!(parse_poly("z3m1").unwrap(), parse_poly("-1,0,0,1").unwrap());
        assert_eq!(parse_poly("quartic-escape:10").unwrap().degree(), 4);
        assert_eq!(parse_poly("per2:0.5+1i").unwrap(), per2_poly(Complex64::new(0.5, 1.0)));
        assert!(parse_poly("1,2").is_err());
    }
}
