//! Command-line interface: group construction and inspection, measure
//! building, transport-cost evaluation, dual operators, sampling, and the
//! inequality-verification suite.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or input error.

use clap::{Args, Parser, Subcommand};
use permconc::dualops;
use permconc::measures::{
    ewens_product, pushforward_product, relative_entropy, total_variation, Measure,
    ProductMeasure,
};
use permconc::permcore::{GroupSpec, GroupTable, LocalBase, Permutation, DEFAULT_ELEMENT_CAP};
use permconc::sampling::{
    run_deviation_experiment, write_csv, DeviationExperiment, StatisticKind,
};
use permconc::slice::{MultinomialSet, SliceSet};
use permconc::transport::{
    group_coords, hamming_matrix, t2_hat, t2_paren, t2_tilde, transposition_matrix_cached, w1,
    CostResult, FwOptions,
};
use permconc::verify::{self, GroupInstance, Metric, VerificationReport};
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "permconc",
    about = "Weak transport costs and concentration-inequality checks on permutation groups"
)]
struct Cli {
    /// Cap the worker thread pool.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build or inspect a permutation group and its local base.
    Group {
        #[command(subcommand)]
        cmd: GroupCmd,
    },
    /// Build measures, compute relative entropy and total variation.
    Measure {
        #[command(subcommand)]
        cmd: MeasureCmd,
    },
    /// Evaluate transport costs between two measures.
    Transport {
        #[command(subcommand)]
        cmd: TransportCmd,
    },
    /// Evaluate infimum-convolution operators and the hull functional.
    Dual {
        #[command(subcommand)]
        cmd: DualCmd,
    },
    /// Draw samples or run a deviation experiment.
    Sample {
        #[command(subcommand)]
        cmd: SampleCmd,
    },
    /// Run inequality verification suites.
    Verify(VerifyArgs),
}

#[derive(Args, Clone)]
struct GroupArgs {
    /// Builtin family: Sn, An, or product (direct product of symmetric
    /// groups over --blocks).
    #[arg(long)]
    group: Option<String>,
    /// Degree for Sn / An.
    #[arg(long)]
    n: Option<usize>,
    /// Block sizes for the product family, e.g. 2,3.
    #[arg(long, value_delimiter = ',')]
    blocks: Vec<usize>,
    /// JSON group spec file: {"n": .., "generators": [[one-based images]...],
    /// "ell": optional}.
    #[arg(long)]
    spec: Option<PathBuf>,
}

impl GroupArgs {
    fn build(&self) -> Result<GroupTable, String> {
        if let Some(path) = &self.spec {
            let text = fs::read_to_string(path)
                .map_err(|e| format!("field --spec: cannot read {}: {e}", path.display()))?;
            let spec: GroupSpec = serde_json::from_str(&text)
                .map_err(|e| format!("field --spec: malformed group spec: {e}"))?;
            return spec
                .build(DEFAULT_ELEMENT_CAP)
                .map_err(|e| format!("field --spec: {e}"));
        }
        let fam = self
            .group
            .as_deref()
            .ok_or("field --group: required (Sn, An, or product) unless --spec is given")?;
        match fam {
            "Sn" => {
                let n = self.n.ok_or("field --n: required for Sn")?;
                GroupTable::symmetric(n, DEFAULT_ELEMENT_CAP).map_err(|e| format!("--n: {e}"))
            }
            "An" => {
                let n = self.n.ok_or("field --n: required for An")?;
                GroupTable::alternating(n, DEFAULT_ELEMENT_CAP).map_err(|e| format!("--n: {e}"))
            }
            "product" => {
                if self.blocks.is_empty() {
                    return Err("field --blocks: required for the product family".into());
                }
                GroupTable::product_symmetric(&self.blocks, DEFAULT_ELEMENT_CAP)
                    .map_err(|e| format!("--blocks: {e}"))
            }
            other => Err(format!(
                "field --group: unknown family '{other}' (expected Sn, An, product)"
            )),
        }
    }

    fn build_with_base(&self) -> Result<(GroupTable, LocalBase, usize), String> {
        let group = self.build()?;
        let ell = group
            .minimal_locality()
            .ok_or("group is not ℓ-local for any ℓ ≤ n")?;
        let base = LocalBase::build(&group, ell).map_err(|e| e.to_string())?;
        Ok((group, base, ell))
    }
}

#[derive(Args, Clone)]
struct MeasureArgs {
    /// uniform | ewens | product
    #[arg(long, default_value = "uniform")]
    measure: String,
    /// Ewens parameter θ.
    #[arg(long)]
    theta: Option<f64>,
    /// JSON product-measure file {"factors": [[...], ...]}.
    #[arg(long)]
    product: Option<PathBuf>,
}

impl MeasureArgs {
    fn product_measure(&self, base: &LocalBase) -> Result<ProductMeasure, String> {
        match self.measure.as_str() {
            "uniform" => Ok(ProductMeasure::uniform(base)),
            "ewens" => {
                let theta = self.theta.ok_or("field --theta: required for ewens")?;
                ewens_product(base, theta).map_err(|e| format!("--theta: {e}"))
            }
            "product" => {
                let path = self
                    .product
                    .as_ref()
                    .ok_or("field --product: required for the product measure")?;
                let text = fs::read_to_string(path)
                    .map_err(|e| format!("field --product: cannot read: {e}"))?;
                let pm: ProductMeasure = serde_json::from_str(&text)
                    .map_err(|e| format!("field --product: malformed: {e}"))?;
                pm.validate(base).map_err(|e| format!("--product: {e}"))?;
                Ok(pm)
            }
            other => Err(format!(
                "field --measure: unknown kind '{other}' (expected uniform, ewens, product)"
            )),
        }
    }
}

#[derive(Subcommand)]
enum GroupCmd {
    /// Enumerate the group and write it (elements, orbits, base) as JSON.
    Build {
        #[command(flatten)]
        group: GroupArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print order, orbits, K_n and the minimal locality.
    Inspect {
        #[command(flatten)]
        group: GroupArgs,
    },
}

#[derive(Subcommand)]
enum MeasureCmd {
    /// Materialize the pushforward measure on the group as JSON.
    Build {
        #[command(flatten)]
        group: GroupArgs,
        #[command(flatten)]
        measure: MeasureArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Relative entropy H(ν | μ), ν from a JSON measure file.
    Entropy {
        #[command(flatten)]
        group: GroupArgs,
        #[command(flatten)]
        measure: MeasureArgs,
        #[arg(long)]
        nu: PathBuf,
    },
    /// Total variation Σ|a − b| between two JSON measure files.
    Tv {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
}

#[derive(Args, Clone)]
struct PairArgs {
    /// JSON measure file for ν1; defaults to the carrier's μ.
    #[arg(long)]
    nu1: Option<PathBuf>,
    /// JSON measure file for ν2; defaults to the carrier's μ.
    #[arg(long)]
    nu2: Option<PathBuf>,
    /// Dirac index for ν1 (overrides --nu1).
    #[arg(long)]
    dirac1: Option<usize>,
    /// Dirac index for ν2 (overrides --nu2).
    #[arg(long)]
    dirac2: Option<usize>,
    /// Include the optimal coupling matrix in the output.
    #[arg(long)]
    emit_coupling: bool,
}

impl PairArgs {
    fn resolve(&self, mu: &Measure) -> Result<(Measure, Measure), String> {
        let load = |path: &PathBuf| -> Result<Measure, String> {
            let text =
                fs::read_to_string(path).map_err(|e| format!("cannot read measure file: {e}"))?;
            serde_json::from_str(&text).map_err(|e| format!("malformed measure file: {e}"))
        };
        let pick = |dirac: Option<usize>, file: &Option<PathBuf>| -> Result<Measure, String> {
            if let Some(x) = dirac {
                return Measure::dirac(mu.carrier_id.clone(), mu.len(), x)
                    .map_err(|e| format!("dirac index: {e}"));
            }
            match file {
                Some(p) => load(p),
                None => Ok(mu.clone()),
            }
        };
        Ok((pick(self.dirac1, &self.nu1)?, pick(self.dirac2, &self.nu2)?))
    }
}

#[derive(Subcommand)]
enum TransportCmd {
    /// Classical W1 between two measures on a group carrier.
    W1 {
        #[command(flatten)]
        group: GroupArgs,
        #[command(flatten)]
        measure: MeasureArgs,
        #[command(flatten)]
        pair: PairArgs,
        /// hamming | transposition
        #[arg(long, default_value = "hamming")]
        metric: String,
    },
    /// Distance-barycenter weak cost on a group carrier.
    T2tilde {
        #[command(flatten)]
        group: GroupArgs,
        #[command(flatten)]
        measure: MeasureArgs,
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, default_value = "hamming")]
        metric: String,
    },
    /// Coordinate weak cost on a group carrier.
    T2paren {
        #[command(flatten)]
        group: GroupArgs,
        #[command(flatten)]
        measure: MeasureArgs,
        #[command(flatten)]
        pair: PairArgs,
    },
    /// Coordinate weak cost on a slice or multinomial carrier.
    T2hat {
        /// Slice parameters n,k.
        #[arg(long, value_delimiter = ',')]
        slice: Vec<usize>,
        /// Multinomial parts, e.g. 2,1,1.
        #[arg(long, value_delimiter = ',')]
        parts: Vec<usize>,
        #[command(flatten)]
        pair: PairArgs,
    },
}

#[derive(Subcommand)]
enum DualCmd {
    /// Evaluate an infimum-convolution operator at every carrier point.
    Eval {
        #[command(flatten)]
        group: GroupArgs,
        /// rc | qw1 | qtilde | qtilde-alpha | qparen | qj | qhat-slice
        #[arg(long)]
        op: String,
        /// JSON array of function values over the carrier.
        #[arg(long)]
        phi: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        c: f64,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        /// Coordinate for qj (0-based).
        #[arg(long, default_value_t = 0)]
        j: usize,
        /// hamming | transposition (distance-based operators).
        #[arg(long, default_value = "hamming")]
        metric: String,
    },
    /// Convex-hull distance functional f(σ, A) for all σ.
    TalagrandF {
        #[command(flatten)]
        group: GroupArgs,
        /// "id" or comma-separated element indices (enumeration order).
        #[arg(long)]
        set: String,
    },
}

#[derive(Subcommand)]
enum SampleCmd {
    /// Draw permutations from a product measure.
    Draw {
        #[command(flatten)]
        group: GroupArgs,
        #[command(flatten)]
        measure: MeasureArgs,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long)]
        seed: u64,
    },
    /// Run a deviation experiment and emit the CSV report.
    Deviation {
        #[command(flatten)]
        group: GroupArgs,
        #[command(flatten)]
        measure: MeasureArgs,
        /// Cycle length of the counting statistic.
        #[arg(long, default_value_t = 2)]
        l: usize,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        grid_points: usize,
        #[arg(long, default_value_t = 5.0)]
        grid_max: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct VerifyArgs {
    /// all | tw1 | t-tilde | t-paren | talagrand | ckp | hoeffding | slice |
    /// multinomial
    id: String,
    #[arg(long)]
    seed: u64,
    /// Random witness pairs per inequality.
    #[arg(long, default_value_t = 500)]
    pairs: usize,
    #[command(flatten)]
    group: GroupArgs,
    #[command(flatten)]
    measure: MeasureArgs,
    /// hamming | transposition
    #[arg(long, default_value = "hamming")]
    metric: String,
    /// Override c(ℓ) (regression canaries).
    #[arg(long)]
    c_override: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_metric(s: &str) -> Result<Metric, String> {
    match s {
        "hamming" => Ok(Metric::Hamming),
        "transposition" => Ok(Metric::Transposition),
        other => Err(format!(
            "field --metric: unknown metric '{other}' (expected hamming, transposition)"
        )),
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), String> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| format!("cannot write output: {e}")),
        None => {
            // Tolerate a closed pipe (e.g. `| head`) instead of panicking.
            use std::io::Write;
            let _ = writeln!(std::io::stdout(), "{text}");
            Ok(())
        }
    }
}

fn cost_json(res: CostResult, emit_coupling: bool) -> Result<String, String> {
    let res = if emit_coupling { res } else { res.without_coupling() };
    serde_json::to_string_pretty(&res).map_err(|e| e.to_string())
}

fn instance_from(group: &GroupArgs, measure: &MeasureArgs) -> Result<GroupInstance, String> {
    let (g, base, _) = group.build_with_base()?;
    let pm = measure.product_measure(&base)?;
    GroupInstance::from_product(describe_group(group), g, base, &pm).map_err(|e| e.to_string())
}

fn describe_group(args: &GroupArgs) -> String {
    if let Some(spec) = &args.spec {
        return format!("spec:{}", spec.display());
    }
    match (args.group.as_deref(), args.n) {
        (Some("product"), _) => format!(
            "product:{}",
            args.blocks
                .iter()
                .map(|b| b.to_string())
                .collect::<Vec<_>>()
                .join("x")
        ),
        (Some(f), Some(n)) => format!("{f}{n}"),
        _ => "group".into(),
    }
}

fn run(cli: Cli) -> Result<u8, String> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| format!("field --threads: {e}"))?;
    }
    match cli.cmd {
        Cmd::Group { cmd } => match cmd {
            GroupCmd::Build { group, out } => {
                let (g, base, ell) = group.build_with_base()?;
                let doc = serde_json::json!({
                    "n": g.n(),
                    "order": g.len(),
                    "ell": ell,
                    "k_n": g.k_n(),
                    "fingerprint": g.fingerprint(),
                    "base_fingerprint": base.fingerprint(),
                    "orbits": (2..=g.n()).map(|m| base.orbit_points(m).iter().map(|&i| i + 1).collect::<Vec<_>>()).collect::<Vec<_>>(),
                    "elements": g.elements().iter().map(|p| p.one_based()).collect::<Vec<_>>(),
                });
                emit(&out, &serde_json::to_string_pretty(&doc).map_err(|e| e.to_string())?)?;
                Ok(0)
            }
            GroupCmd::Inspect { group } => {
                let (g, base, ell) = group.build_with_base()?;
                println!("|G| = {}", g.len());
                println!("degree n = {}", g.n());
                println!("K_n = {}", g.k_n());
                println!("minimal locality ell = {ell}");
                for m in 2..=g.n() {
                    let pts: Vec<usize> = base.orbit_points(m).iter().map(|&i| i + 1).collect();
                    println!("orbit O_{m} = {pts:?}");
                }
                println!("group fingerprint = {}", g.fingerprint());
                println!("base fingerprint = {}", base.fingerprint());
                Ok(0)
            }
        },
        Cmd::Measure { cmd } => match cmd {
            MeasureCmd::Build { group, measure, out } => {
                let (g, base, _) = group.build_with_base()?;
                let pm = measure.product_measure(&base)?;
                let mu = pushforward_product(&g, &base, &pm).map_err(|e| e.to_string())?;
                emit(&out, &serde_json::to_string_pretty(&mu).map_err(|e| e.to_string())?)?;
                Ok(0)
            }
            MeasureCmd::Entropy { group, measure, nu } => {
                let (g, base, _) = group.build_with_base()?;
                let pm = measure.product_measure(&base)?;
                let mu = pushforward_product(&g, &base, &pm).map_err(|e| e.to_string())?;
                let text =
                    fs::read_to_string(&nu).map_err(|e| format!("field --nu: cannot read: {e}"))?;
                let nu: Measure = serde_json::from_str(&text)
                    .map_err(|e| format!("field --nu: malformed measure: {e}"))?;
                let h = relative_entropy(&nu, &mu).map_err(|e| e.to_string())?;
                println!("{h:.12}");
                Ok(0)
            }
            MeasureCmd::Tv { a, b } => {
                let read = |p: &PathBuf| -> Result<Measure, String> {
                    let text =
                        fs::read_to_string(p).map_err(|e| format!("cannot read measure: {e}"))?;
                    serde_json::from_str(&text).map_err(|e| format!("malformed measure: {e}"))
                };
                let tv = total_variation(&read(&a)?, &read(&b)?).map_err(|e| e.to_string())?;
                println!("{tv:.12}");
                Ok(0)
            }
        },
        Cmd::Transport { cmd } => {
            let opts = FwOptions::default();
            match cmd {
                TransportCmd::W1 { group, measure, pair, metric } => {
                    let (g, base, ell) = group.build_with_base()?;
                    let pm = measure.product_measure(&base)?;
                    let mu = pushforward_product(&g, &base, &pm).map_err(|e| e.to_string())?;
                    let (n1, n2) = pair.resolve(&mu)?;
                    let met = parse_metric(&metric)?;
                    let dist = match met {
                        Metric::Hamming => hamming_matrix(&g),
                        Metric::Transposition => {
                            transposition_matrix_cached(&g, ell).map_err(|e| e.to_string())?
                        }
                    };
                    let res = w1(&n1, &n2, &dist, met.name()).map_err(|e| e.to_string())?;
                    println!("{}", cost_json(res, pair.emit_coupling)?);
                    Ok(0)
                }
                TransportCmd::T2tilde { group, measure, pair, metric } => {
                    let (g, base, ell) = group.build_with_base()?;
                    let pm = measure.product_measure(&base)?;
                    let mu = pushforward_product(&g, &base, &pm).map_err(|e| e.to_string())?;
                    let (n1, n2) = pair.resolve(&mu)?;
                    let met = parse_metric(&metric)?;
                    let dist = match met {
                        Metric::Hamming => hamming_matrix(&g),
                        Metric::Transposition => {
                            transposition_matrix_cached(&g, ell).map_err(|e| e.to_string())?
                        }
                    };
                    let res =
                        t2_tilde(&n1, &n2, &dist, met.name(), &opts).map_err(|e| e.to_string())?;
                    println!("{}", cost_json(res, pair.emit_coupling)?);
                    Ok(0)
                }
                TransportCmd::T2paren { group, measure, pair } => {
                    let (g, base, _) = group.build_with_base()?;
                    let pm = measure.product_measure(&base)?;
                    let mu = pushforward_product(&g, &base, &pm).map_err(|e| e.to_string())?;
                    let (n1, n2) = pair.resolve(&mu)?;
                    let coords = group_coords(&g);
                    let res = t2_paren(&n1, &n2, &coords, &opts).map_err(|e| e.to_string())?;
                    println!("{}", cost_json(res, pair.emit_coupling)?);
                    Ok(0)
                }
                TransportCmd::T2hat { slice, parts, pair } => {
                    let (coords, carrier) = if !slice.is_empty() {
                        if slice.len() != 2 {
                            return Err("field --slice: expected n,k".into());
                        }
                        let s = SliceSet::new(slice[0], slice[1]).map_err(|e| e.to_string())?;
                        (s.points().to_vec(), s.carrier_id())
                    } else if !parts.is_empty() {
                        let s = MultinomialSet::new(&parts).map_err(|e| e.to_string())?;
                        (s.points().to_vec(), s.carrier_id())
                    } else {
                        return Err("field --slice/--parts: one carrier is required".into());
                    };
                    let mu =
                        Measure::uniform(carrier, coords.len()).map_err(|e| e.to_string())?;
                    let (n1, n2) = pair.resolve(&mu)?;
                    let res = t2_hat(&n1, &n2, &coords, &opts).map_err(|e| e.to_string())?;
                    println!("{}", cost_json(res, pair.emit_coupling)?);
                    Ok(0)
                }
            }
        }
        Cmd::Dual { cmd } => match cmd {
            DualCmd::Eval { group, op, phi, c, t, alpha, j, metric } => {
                let (g, _base, ell) = group.build_with_base()?;
                let text = fs::read_to_string(&phi)
                    .map_err(|e| format!("field --phi: cannot read: {e}"))?;
                let phi: Vec<f64> = serde_json::from_str(&text)
                    .map_err(|e| format!("field --phi: malformed array: {e}"))?;
                if phi.len() != g.len() {
                    return Err(format!(
                        "field --phi: {} values for a carrier of size {}",
                        phi.len(),
                        g.len()
                    ));
                }
                let met = parse_metric(&metric)?;
                let dist = match met {
                    Metric::Hamming => hamming_matrix(&g),
                    Metric::Transposition => {
                        transposition_matrix_cached(&g, ell).map_err(|e| e.to_string())?
                    }
                };
                let coords = group_coords(&g);
                let values: Vec<f64> = match op.as_str() {
                    "rc" => (0..g.len()).map(|x| dualops::r_c(&phi, c, x)).collect(),
                    "qw1" => (0..g.len()).map(|x| dualops::q_w1(&phi, &dist[x], x)).collect(),
                    "qtilde" => (0..g.len())
                        .map(|x| dualops::q_tilde(&phi, t, c, &dist[x]))
                        .collect::<Result<_, _>>()
                        .map_err(|e| e.to_string())?,
                    "qtilde-alpha" => (0..g.len())
                        .map(|x| dualops::q_tilde_alpha(&phi, t, c, alpha, &dist[x]))
                        .collect::<Result<_, _>>()
                        .map_err(|e| e.to_string())?,
                    "qparen" => (0..g.len())
                        .map(|x| dualops::q_paren(&phi, c * c, &coords, x, 1e-8).map(|v| v.0))
                        .collect::<Result<_, _>>()
                        .map_err(|e| e.to_string())?,
                    "qj" => (0..g.len())
                        .map(|x| dualops::q_j(&phi, c * c, j, &coords, x, 1e-8).map(|v| v.0))
                        .collect::<Result<_, _>>()
                        .map_err(|e| e.to_string())?,
                    other => {
                        return Err(format!(
                            "field --op: unknown operator '{other}' (rc, qw1, qtilde, qtilde-alpha, qparen, qj)"
                        ))
                    }
                };
                println!(
                    "{}",
                    serde_json::to_string_pretty(&values).map_err(|e| e.to_string())?
                );
                Ok(0)
            }
            DualCmd::TalagrandF { group, set } => {
                let (g, _base, _) = group.build_with_base()?;
                let coords = group_coords(&g);
                let ids: Vec<usize> = if set == "id" {
                    vec![g
                        .index_of(&Permutation::identity(g.n()))
                        .expect("identity is in every group")]
                } else {
                    set.split(',')
                        .map(|s| {
                            s.trim()
                                .parse::<usize>()
                                .map_err(|e| format!("field --set: {e}"))
                        })
                        .collect::<Result<_, _>>()?
                };
                if let Some(&bad) = ids.iter().find(|&&i| i >= g.len()) {
                    return Err(format!("field --set: index {bad} out of range"));
                }
                let refs: Vec<&[u8]> = ids.iter().map(|&i| coords[i].as_slice()).collect();
                for (i, sigma) in g.elements().iter().enumerate() {
                    let (f, _) = dualops::talagrand_f(&coords[i], &refs)
                        .map_err(|e| e.to_string())?;
                    println!("{sigma}\t{f:.12}");
                }
                Ok(0)
            }
        },
        Cmd::Sample { cmd } => match cmd {
            SampleCmd::Draw { group, measure, count, seed } => {
                let (_, base, _) = group.build_with_base()?;
                let pm = measure.product_measure(&base)?;
                let draws = permconc::sampling::sample(&base, &pm, count, seed)
                    .map_err(|e| e.to_string())?;
                for d in draws {
                    println!("{d}");
                }
                Ok(0)
            }
            SampleCmd::Deviation {
                group,
                measure,
                l,
                samples,
                seed,
                grid_points,
                grid_max,
                out,
            } => {
                let (g, base, _) = group.build_with_base()?;
                let pm = measure.product_measure(&base)?;
                let exp = DeviationExperiment {
                    statistic: StatisticKind::LCycleCount { l },
                    sample_count: samples,
                    seed,
                    u_grid: (0..grid_points)
                        .map(|i| i as f64 * grid_max / grid_points as f64)
                        .collect(),
                };
                let report = run_deviation_experiment(&g, &base, &pm, &exp, None)
                    .map_err(|e| e.to_string())?;
                let mut buf = Vec::new();
                write_csv(&report, &mut buf).map_err(|e| e.to_string())?;
                emit(&out, String::from_utf8(buf).map_err(|e| e.to_string())?.trim_end())?;
                Ok(0)
            }
        },
        Cmd::Verify(args) => {
            let reports = run_verify(&args)?;
            let text = serde_json::to_string_pretty(&reports).map_err(|e| e.to_string())?;
            emit(&args.out, &text)?;
            if reports.iter().all(|r| r.pass) {
                Ok(0)
            } else {
                Ok(1)
            }
        }
    }
}

fn run_verify(args: &VerifyArgs) -> Result<Vec<VerificationReport>, String> {
    let met = parse_metric(&args.metric)?;
    let one = |r: Result<VerificationReport, verify::VerifyError>| -> Result<
        Vec<VerificationReport>,
        String,
    > { r.map(|x| vec![x]).map_err(|e| e.to_string()) };
    match args.id.as_str() {
        // With an explicit group, run every family on that instance;
        // otherwise run the default carrier battery.
        "all" if args.group.group.is_some() || args.group.spec.is_some() => {
            let inst = instance_from(&args.group, &args.measure)?;
            let e = |x: verify::VerifyError| x.to_string();
            Ok(vec![
                verify::verify_tw1(&inst, Metric::Hamming, args.pairs, args.seed, None)
                    .map_err(e)?,
                verify::verify_tw1(&inst, Metric::Transposition, args.pairs, args.seed, None)
                    .map_err(e)?,
                verify::verify_t_tilde(&inst, Metric::Hamming, args.pairs, args.seed, 20)
                    .map_err(e)?,
                verify::verify_t_paren(&inst, args.pairs, args.seed, 20).map_err(e)?,
                verify::verify_talagrand(&inst, 50, args.seed).map_err(e)?,
                verify::verify_ckp(&inst.mu, &inst.name, args.pairs, args.seed).map_err(e)?,
                verify::verify_hoeffding_dual(&inst, Metric::Hamming, 50, args.seed).map_err(e)?,
                verify::verify_hoeffding_dual(&inst, Metric::Transposition, 50, args.seed)
                    .map_err(e)?,
            ])
        }
        "all" => verify::verify_all(args.pairs, args.seed).map_err(|e| e.to_string()),
        "tw1" => one(verify::verify_tw1(
            &instance_from(&args.group, &args.measure)?,
            met,
            args.pairs,
            args.seed,
            args.c_override,
        )),
        "t-tilde" => one(verify::verify_t_tilde(
            &instance_from(&args.group, &args.measure)?,
            met,
            args.pairs,
            args.seed,
            20,
        )),
        "t-paren" => one(verify::verify_t_paren(
            &instance_from(&args.group, &args.measure)?,
            args.pairs,
            args.seed,
            20,
        )),
        "talagrand" => one(verify::verify_talagrand(
            &instance_from(&args.group, &args.measure)?,
            50,
            args.seed,
        )),
        "ckp" => {
            let inst = instance_from(&args.group, &args.measure)?;
            one(verify::verify_ckp(&inst.mu, &inst.name, args.pairs, args.seed))
        }
        "hoeffding" => one(verify::verify_hoeffding_dual(
            &instance_from(&args.group, &args.measure)?,
            met,
            50,
            args.seed,
        )),
        "slice" => {
            let mut out = Vec::new();
            for (n, k) in [(4usize, 2usize), (5, 2)] {
                out.push(
                    verify::verify_slice(n, k, args.pairs, args.seed).map_err(|e| e.to_string())?,
                );
            }
            Ok(out)
        }
        "multinomial" => one(verify::verify_multinomial(&[2, 1, 1], args.pairs, args.seed)),
        other => Err(format!(
            "field <id>: unknown inequality '{other}' (all, tw1, t-tilde, t-paren, talagrand, ckp, hoeffding, slice, multinomial)"
        )),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
