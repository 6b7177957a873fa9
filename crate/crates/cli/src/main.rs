//! `ontoq`: rewrite ontological queries into nonrecursive Datalog, SQL or
//! first-order formulas, evaluate them, and cross-check against the chase.

mod commands;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ontoq_core::Variant;

#[derive(Parser, Debug)]
#[command(name = "ontoq", version, about = "Ontological query rewriting into nonrecursive Datalog")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Rewrite tgds and a query into a Datalog program, SQL script or FO formula.
    Rewrite(RewriteArgs),
    /// Evaluate a Datalog program over facts.
    Eval(EvalArgs),
    /// Run the chase, or search for a witness of a query.
    Chase(ChaseArgs),
    /// Rewrite and evaluate in one go.
    Answer(AnswerArgs),
    /// Differential check of the rewriting against the chase on random instances.
    Verify(VerifyArgs),
    /// Compile a DL-Lite TBox into tgds.
    CompileTbox(CompileTboxArgs),
    /// Put tgds into normal form.
    Normalize(NormalizeArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Emit {
    Dl,
    Sql,
    Fo,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    Wide,
    Reduced,
    Bitvec,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Variant {
        match v {
            VariantArg::Wide => Variant::Wide,
            VariantArg::Reduced => Variant::Reduced,
            VariantArg::Bitvec => Variant::Bitvec,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ProfileArg {
    Linear,
    General,
    MultiHead,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum QueryKind {
    Boolean,
    Output,
}

/// The problem inputs shared by `rewrite` and `answer`.
#[derive(Args, Debug)]
struct ProblemArgs {
    /// Tgd file (`-` for stdin).
    #[arg(long, env = "ONTOQ_TGDS")]
    tgds: String,
    /// Query file (`-` for stdin).
    #[arg(long, env = "ONTOQ_QUERY")]
    query: String,
    #[arg(long, value_enum, default_value = "wide", env = "ONTOQ_VARIANT")]
    variant: VariantArg,
}

#[derive(Args, Debug)]
struct RewriteArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Length N of the guessed chase sequence; defaults to the smallest allowed.
    #[arg(long, env = "ONTOQ_STEPS")]
    steps: Option<u32>,
    #[arg(long, value_enum, default_value = "dl", env = "ONTOQ_EMIT")]
    emit: Emit,
    /// Facts to insert into the SQL script.
    #[arg(long, env = "ONTOQ_FACTS")]
    facts: Option<String>,
    /// Read digit strings in facts as constants.
    #[arg(long, env = "ONTOQ_DIGIT_CONSTANTS")]
    digit_constants: bool,
    /// Print program statistics to stderr.
    #[arg(long, env = "ONTOQ_STATS")]
    stats: bool,
    /// Write the output here instead of stdout.
    #[arg(short, long, env = "ONTOQ_OUTPUT")]
    output: Option<String>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Datalog program (`-` for stdin).
    #[arg(long, env = "ONTOQ_PROGRAM")]
    program: String,
    /// Facts file (`-` for stdin).
    #[arg(long, env = "ONTOQ_FACTS")]
    facts: String,
    /// Numbers available are 0..=max(steps, the program's `%@numeric`).
    #[arg(long, default_value_t = 0, env = "ONTOQ_STEPS")]
    steps: u32,
    #[arg(long, env = "ONTOQ_DIGIT_CONSTANTS")]
    digit_constants: bool,
    /// Print the goal-rule assignment that satisfied a Boolean goal.
    #[arg(long, env = "ONTOQ_TRACE")]
    trace: bool,
    #[arg(long, env = "ONTOQ_TIMEOUT_MS")]
    timeout_ms: Option<u64>,
    /// Exit with status 1 when a Boolean goal is false.
    #[arg(long, env = "ONTOQ_EXIT_STATUS")]
    exit_status: bool,
    #[arg(long, env = "ONTOQ_STATS")]
    stats: bool,
}

#[derive(Args, Debug)]
struct ChaseArgs {
    #[arg(long, env = "ONTOQ_TGDS")]
    tgds: String,
    #[arg(long, env = "ONTOQ_FACTS")]
    facts: String,
    /// With a query, search for its shortest witness instead.
    #[arg(long, env = "ONTOQ_QUERY")]
    query: Option<String>,
    /// Longest chase sequence considered.
    #[arg(long, default_value_t = 10, env = "ONTOQ_MAX_STEPS")]
    max_steps: u32,
    /// Derivation level to stop at when printing the chase.
    #[arg(long, env = "ONTOQ_LEVEL")]
    level: Option<u32>,
    #[arg(long, env = "ONTOQ_DIGIT_CONSTANTS")]
    digit_constants: bool,
}

#[derive(Args, Debug)]
struct AnswerArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, env = "ONTOQ_FACTS")]
    facts: String,
    #[arg(long, env = "ONTOQ_STEPS", required_unless_present = "auto_n")]
    steps: Option<u32>,
    /// Pick N from the data by running the oracle first (verification only:
    /// the result then depends on the database).
    #[arg(long, conflicts_with = "steps", env = "ONTOQ_AUTO_N")]
    auto_n: bool,
    /// Oracle budget used by --auto-n.
    #[arg(long, default_value_t = 10, env = "ONTOQ_ORACLE_STEPS")]
    oracle_steps: u32,
    #[arg(long, env = "ONTOQ_DIGIT_CONSTANTS")]
    digit_constants: bool,
    /// Print the decoded chase-sequence encoding of a positive answer.
    #[arg(long, env = "ONTOQ_TRACE")]
    trace: bool,
    #[arg(long, env = "ONTOQ_TIMEOUT_MS")]
    timeout_ms: Option<u64>,
    #[arg(long, env = "ONTOQ_EXIT_STATUS")]
    exit_status: bool,
    #[arg(long, env = "ONTOQ_STATS")]
    stats: bool,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// `COUNT` or `START..END`.
    #[arg(long, default_value = "200", env = "ONTOQ_SEEDS")]
    seeds: String,
    #[arg(long, value_enum, default_value = "linear", env = "ONTOQ_PROFILE")]
    profile: ProfileArg,
    #[arg(long, value_enum, default_value = "boolean", env = "ONTOQ_KIND")]
    kind: QueryKind,
    /// JSON-lines report destination (`-` for stdout).
    #[arg(long, env = "ONTOQ_REPORT")]
    report: Option<String>,
    /// Use this N for every instance instead of the witness-based policy.
    #[arg(long, env = "ONTOQ_STEPS")]
    steps: Option<u32>,
    #[arg(long, value_enum, value_delimiter = ',', default_values = ["wide", "reduced", "bitvec"], env = "ONTOQ_VARIANTS")]
    variants: Vec<VariantArg>,
    #[arg(long, env = "ONTOQ_THREADS")]
    threads: Option<usize>,
    #[arg(long, default_value_t = 60_000, env = "ONTOQ_TIMEOUT_MS")]
    timeout_ms: u64,
}

#[derive(Args, Debug)]
struct CompileTboxArgs {
    /// DL-Lite TBox (`-` for stdin).
    input: String,
    #[arg(short, long, env = "ONTOQ_OUTPUT")]
    output: Option<String>,
    /// Write the disjointness violation query here.
    #[arg(long)]
    violation_query: Option<String>,
}

#[derive(Args, Debug)]
struct NormalizeArgs {
    /// Tgd file (`-` for stdin).
    input: String,
    #[arg(short, long, env = "ONTOQ_OUTPUT")]
    output: Option<String>,
    #[arg(long, env = "ONTOQ_STATS")]
    stats: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Rewrite(a) => commands::rewrite(a),
        Command::Eval(a) => commands::eval(a),
        Command::Chase(a) => commands::chase(a),
        Command::Answer(a) => commands::answer(a),
        Command::Verify(a) => commands::verify(a),
        Command::CompileTbox(a) => commands::compile_tbox(a),
        Command::Normalize(a) => commands::normalize(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
