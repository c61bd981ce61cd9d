use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ewsvm_core::error::Error;
use ewsvm_core::features::PcaProjection;
use ewsvm_core::io::{
    meta_path, model_text, num, read_dataset, read_witness, witness_text, write_dataset,
    write_text, KeyValues,
};
use ewsvm_core::optimality::{
    nondecomposability_verdict, optimality_verdict, pptes_scan, tangent_states_within, EdgeGrid,
    EPS_TANGENT,
};
use ewsvm_core::pipeline::{
    family_threshold, run_pipeline, threshold_fields, train_witness, verification_fields,
    write_run, WitnessTrainingConfig,
};
use ewsvm_core::reference::Reference;
use ewsvm_core::states::{
    generate_dataset, BaseState, DatasetConfig, EntangledFamily, Label, Symmetry,
};
use ewsvm_core::svm::TrainConfig;
use ewsvm_core::witness::{verify_witness, WitnessOperator, DEFAULT_RESTARTS};

const EXIT_CONFIG: u8 = 2;
const EXIT_VERDICT: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(
    name = "ewsvm",
    version,
    about = "Entanglement witnesses from linear SVMs on Pauli features"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled dataset with a metadata sidecar.
    Gen(GenArgs),
    /// Train, refine and calibrate a witness from a dataset, or verify a bundled reference.
    Train(TrainArgs),
    /// Tangent-state optimality and PPT-entangled-state certificates for a witness.
    Certify(CertifyArgs),
    /// Three-component PCA projection of a dataset.
    Pca(PcaArgs),
    /// gen + train in one step, writing every artifact into a directory.
    Run(RunArgs),
}

#[derive(Args, Clone)]
struct DataArgs {
    #[arg(long, default_value_t = 2)]
    qubits: usize,
    /// werner-bell00 … werner-bell11, werner-ghzN, werner-ghz3q, edge-ppt-entangled.
    /// Defaults to werner-bell00 for 2 qubits and werner-ghzN otherwise.
    #[arg(long)]
    family: Option<String>,
    #[arg(long, default_value_t = 500)]
    per_class: usize,
    #[arg(long)]
    p_min: Option<f64>,
    #[arg(long)]
    p_max: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Clone)]
struct TrainFlags {
    #[arg(long = "C", default_value_t = 10.0)]
    c: f64,
    #[arg(long, default_value_t = 2000)]
    epochs: usize,
    #[arg(long, default_value_t = 0.1)]
    lr: f64,
    /// Rounds of product-minimizer refinement; 16 for Werner families, 0 for edge states.
    #[arg(long)]
    refine_rounds: Option<usize>,
    /// Restarts for the product-state minimum.
    #[arg(long, default_value_t = DEFAULT_RESTARTS)]
    restarts: usize,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value = "dataset.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Dataset written by `gen`.
    #[arg(long, required_unless_present = "load_reference")]
    data: Option<PathBuf>,
    #[command(flatten)]
    train: TrainFlags,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Skip training and verify a bundled reference witness.
    #[arg(long)]
    load_reference: Option<Reference>,
    /// Output directory for model.txt and witness.txt.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct CertifyArgs {
    #[arg(long, required_unless_present = "load_reference")]
    witness: Option<PathBuf>,
    #[arg(long)]
    load_reference: Option<Reference>,
    #[arg(long, default_value_t = 1024)]
    restarts: usize,
    /// Points per axis of the edge-state grid (three-qubit witnesses).
    #[arg(long, default_value_t = 20)]
    grid: usize,
    /// Tangency tolerance.
    #[arg(long, default_value_t = EPS_TANGENT)]
    eps: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report path; printed only when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PcaArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "pca.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    train: TrainFlags,
    #[arg(long, default_value = "run")]
    out: PathBuf,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io(_) | Error::Parse { .. } => EXIT_IO,
            Error::Diverged { .. } | Error::NoWitness(_) => EXIT_VERDICT,
            _ => EXIT_CONFIG,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn config_error(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_CONFIG,
        message: message.into(),
    }
}

fn verdict_failure(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_VERDICT,
        message: message.into(),
    }
}

type CmdResult = Result<(), Failure>;

fn dataset_config(args: &DataArgs) -> Result<DatasetConfig, Failure> {
    let family = match &args.family {
        Some(tag) => tag.parse::<EntangledFamily>()?,
        None if args.qubits == 2 => EntangledFamily::Werner(BaseState::Bell { i: 0, j: 0 }),
        None => EntangledFamily::Werner(BaseState::Ghz { n: args.qubits }),
    };
    if family.n_qubits() != args.qubits {
        return Err(config_error(format!(
            "family {} has {} qubits, --qubits is {}",
            family.tag(),
            family.n_qubits(),
            args.qubits
        )));
    }
    let mut cfg = DatasetConfig::new(family, args.per_class, args.seed);
    if let Some(p) = args.p_min {
        cfg.p_min = p;
    }
    if let Some(p) = args.p_max {
        cfg.p_max = p;
    }
    Ok(cfg)
}

fn training_config(
    flags: &TrainFlags,
    family: Option<&EntangledFamily>,
    seed: u64,
) -> Result<WitnessTrainingConfig, Failure> {
    if flags.restarts == 0 {
        return Err(config_error("--restarts must be positive"));
    }
    let base = match family {
        Some(f) => WitnessTrainingConfig::for_family(f, seed),
        None => WitnessTrainingConfig {
            seed,
            ..WitnessTrainingConfig::default()
        },
    };
    Ok(WitnessTrainingConfig {
        train: TrainConfig {
            c: flags.c,
            learning_rate: flags.lr,
            epochs: flags.epochs,
            seed,
            ..TrainConfig::default()
        },
        refine_rounds: flags.refine_rounds.unwrap_or(base.refine_rounds),
        restarts: flags.restarts,
        ..base
    })
}

fn cmd_gen(args: &GenArgs) -> CmdResult {
    let cfg = dataset_config(&args.data)?;
    let samples = generate_dataset(&cfg)?;
    write_dataset(&args.out, &samples, &cfg)?;
    let sep = samples
        .iter()
        .filter(|s| s.label == Label::Separable)
        .count();
    println!(
        "wrote {} ({} separable, {} entangled)",
        args.out.display(),
        sep,
        samples.len() - sep
    );
    Ok(())
}

fn print_verification(kv: &KeyValues) {
    for key in ["min_product_value", "min_eigenvalue", "verdict"] {
        if let Some(v) = kv.get(key) {
            println!("{key}: {v}");
        }
    }
}

fn cmd_train(args: &TrainArgs) -> CmdResult {
    if let Some(r) = args.load_reference {
        let w = r.witness()?;
        let report = verify_witness(&w, args.train.restarts, args.seed)?;
        let mut kv = verification_fields(&report);
        kv.push("source", r.name());
        let path = args.out.join("witness.txt");
        write_text(&path, &witness_text(&w, &kv))?;
        println!("reference {r} written to {}", path.display());
        print_verification(&kv);
        return if report.valid {
            Ok(())
        } else {
            Err(verdict_failure(report.verdict()))
        };
    }
    let data_path = args.data.as_ref().expect("clap requires --data");
    let (set, _) = read_dataset(data_path)?;
    // family from the sidecar, when there is one
    let family = match fs::read_to_string(meta_path(data_path)) {
        Ok(text) => Some(
            KeyValues::parse(&text)?
                .require("family")?
                .parse::<EntangledFamily>()?,
        ),
        Err(_) => None,
    };
    let cfg = training_config(&args.train, family.as_ref(), args.seed)?;
    let symmetry = family.map_or(Symmetry::None, |f| f.symmetry());
    let trained = train_witness(&set, &cfg, symmetry)?;
    let w = trained.witness();
    let report = verify_witness(w, cfg.restarts, args.seed)?;

    let mut meta = KeyValues::new();
    meta.push("seed", args.seed)
        .push("epochs_run", trained.report.epochs_run)
        .push("final_objective", num(trained.report.final_objective))
        .push("training_accuracy", num(trained.report.training_accuracy))
        .push("stage", format!("{:?}", trained.report.stage))
        .push("training_size", trained.training_set.len());
    write_text(
        &args.out.join("model.txt"),
        &model_text(&trained.model, &meta),
    )?;

    let mut kv = verification_fields(&report);
    kv.push("calibration_shift", num(trained.calibration.shift));
    println!("training accuracy: {:.6}", trained.report.training_accuracy);
    if let Some(f) = family {
        if let Some(th) = family_threshold(w, &f)? {
            println!("threshold: {th}");
            threshold_fields(&mut kv, &th);
        }
    }
    write_text(&args.out.join("witness.txt"), &witness_text(w, &kv))?;
    print_verification(&kv);
    if report.valid {
        Ok(())
    } else {
        Err(verdict_failure(report.verdict()))
    }
}

fn load_witness(
    path: Option<&Path>,
    reference: Option<Reference>,
) -> Result<WitnessOperator, Failure> {
    match (reference, path) {
        (Some(r), _) => Ok(r.witness()?),
        (None, Some(p)) => Ok(read_witness(p)?.0),
        (None, None) => Err(config_error("need --witness or --load-reference")),
    }
}

fn cmd_certify(args: &CertifyArgs) -> CmdResult {
    if !(args.eps > 0.0) {
        return Err(config_error("--eps must be positive"));
    }
    if args.grid < 2 {
        return Err(config_error("--grid must be at least 2"));
    }
    let w = load_witness(args.witness.as_deref(), args.load_reference)?;
    let n = w.n_qubits();
    let report = verify_witness(&w, args.restarts, args.seed)?;
    let mut kv = verification_fields(&report);

    let ts = tangent_states_within(&w, 1 << n, args.restarts, args.seed, args.eps);
    let verdict = optimality_verdict(&ts, n);
    let mut table = String::from("#");
    for q in 1..=n {
        table += &format!(" theta{q}");
    }
    for q in 1..=n {
        table += &format!(" alpha{q}");
    }
    table += " value\n";
    for (i, t) in ts.states.iter().enumerate() {
        let angles = t.state.angles();
        let mut cols: Vec<String> = angles.iter().map(|(th, _)| format!("{th:.4}")).collect();
        cols.extend(angles.iter().map(|(_, a)| format!("{a:.4}")));
        table += &format!("{} {:.3e}\n", cols.join(" "), t.value);
        let mut exact: Vec<String> = angles.iter().map(|(th, _)| num(*th)).collect();
        exact.extend(angles.iter().map(|(_, a)| num(*a)));
        exact.push(num(t.value));
        kv.push(format!("tangent.{i}"), exact.join(" "));
    }
    kv.push("tangent.count", ts.states.len())
        .push("span_rank", ts.span_rank)
        .push("optimality", verdict);
    print!("{table}");
    println!("span rank {} of {}: {verdict}", ts.span_rank, 1 << n);

    if n == 3 {
        let hits = pptes_scan(&w, &EdgeGrid::with_points(args.grid))?;
        let dv = nondecomposability_verdict(&hits);
        println!("# a b c trace");
        for (i, h) in hits.iter().enumerate() {
            let (a, b, c) = (h.params.a, h.params.b, h.params.c);
            println!("{a:.5} {b:.5} {c:.5} {:.6e}", h.trace_value);
            kv.push(
                format!("pptes.{i}"),
                format!("{} {} {} {}", num(a), num(b), num(c), num(h.trace_value)),
            );
        }
        kv.push("pptes.count", hits.len())
            .push("decomposability", dv);
        println!("{} PPT entangled edge states detected: {dv}", hits.len());
    }
    print_verification(&kv);
    if let Some(out) = &args.out {
        write_text(out, &kv.render())?;
    }
    if report.valid {
        Ok(())
    } else {
        Err(verdict_failure(report.verdict()))
    }
}

fn cmd_pca(args: &PcaArgs) -> CmdResult {
    let (set, _) = read_dataset(&args.data)?;
    let proj = PcaProjection::fit(set.features(), 3)?;
    let total: f64 = proj.explained_variance.iter().sum();
    let mut out = String::from("pc1,pc2,pc3,label\n");
    for (x, l) in set.features().iter().zip(set.labels()) {
        let z = proj.transform(x)?;
        let label = if *l == Label::Separable { "+1" } else { "-1" };
        out += &format!("{},{},{},{label}\n", num(z[0]), num(z[1]), num(z[2]));
    }
    write_text(&args.out, &out)?;
    // shares of the variance carried by the three retained components
    let shares: Vec<String> = proj
        .explained_variance
        .iter()
        .map(|v| format!("{:.6}", if total > 0.0 { v / total } else { 0.0 }))
        .collect();
    println!("explained variance shares: {}", shares.join(" "));
    Ok(())
}

fn cmd_run(args: &RunArgs) -> CmdResult {
    let data = dataset_config(&args.data)?;
    let cfg = training_config(&args.train, Some(&data.family), args.data.seed)?;
    let run = run_pipeline(&data, &cfg)?;
    let report = verify_witness(run.trained.witness(), cfg.restarts, args.data.seed)?;
    write_run(&args.out, &data, &cfg, &run, &report)?;
    println!("artifacts in {}", args.out.display());
    println!(
        "training accuracy: {:.6}",
        run.trained.report.training_accuracy
    );
    if let Some(th) = &run.threshold {
        println!("threshold: {th}");
    }
    print_verification(&verification_fields(&report));
    if report.valid {
        Ok(())
    } else {
        Err(verdict_failure(report.verdict()))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Train(a) => cmd_train(a),
        Command::Certify(a) => cmd_certify(a),
        Command::Pca(a) => cmd_pca(a),
        Command::Run(a) => cmd_run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
