use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use vneuron::metrics::{
    average_addition, complexity_kv, complexity_table, estimate_energy, format_complexity_table,
    DEFAULT_EXECUTION_WINDOW,
};
use vneuron::mu::{build_constant, build_negate, build_predecessor, build_successor, build_sum_tree};
use vneuron::netlist::{emit_netlist, emit_trace, parse_netlist, parse_trace};
use vneuron::verify::{precision_for_bits, verify_bits, VerifyMode};
use vneuron::{
    build_adder, DyadicValue, EnergyModel, Error, FunctionCircuit, FunctionKind, NetlistProgram,
    Network, PrecisionVector,
};

#[derive(Parser)]
#[command(name = "vneuron", version, about = "Virtual-neuron circuit compiler and simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a circuit to a netlist.
    Build(BuildArgs),
    /// Simulate a netlist on input values.
    Run(RunArgs),
    /// Check the adder against integer addition.
    Verify(VerifyArgs),
    /// Print neuron, synapse and step counts of positive-only adders.
    Complexity(ComplexityArgs),
    /// Estimate spike energy and power.
    Energy(EnergyArgs),
    /// Build and evaluate a function circuit in one go.
    Func(FuncArgs),
}

#[derive(Args)]
struct CircuitArgs {
    /// adder, constant, successor, predecessor, negate or sum-tree.
    #[arg(long, default_value = "adder")]
    kind: String,
    /// P+int,P+frac,P-int,P-frac
    #[arg(long, default_value = "4,4,4,4")]
    precision: PrecisionVector,
    /// Constant value (constant only).
    #[arg(long, allow_hyphen_values = true)]
    k: Option<DyadicValue>,
    /// Number of inputs (sum-tree only).
    #[arg(long, default_value_t = 2)]
    n: usize,
}

#[derive(Args)]
struct BuildArgs {
    #[command(flatten)]
    circuit: CircuitArgs,
    /// Output file; stdout when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    netlist: PathBuf,
    /// Value of operand x, as `v` or `pos,neg`.
    #[arg(long, allow_hyphen_values = true)]
    x: Option<DyadicValue>,
    /// Value of operand y.
    #[arg(long, allow_hyphen_values = true)]
    y: Option<DyadicValue>,
    /// Any operand, as `name=value`.
    #[arg(long = "input", value_parser = parse_named, allow_hyphen_values = true)]
    inputs: Vec<(String, DyadicValue)>,
    /// Write the spike trace here.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// 8, 16 or 32.
    #[arg(long, default_value_t = 16)]
    bits: u32,
    /// Random cases; exhaustive when absent at 8 bits.
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct ComplexityArgs {
    #[arg(long, default_value_t = 128)]
    max_p: u32,
    /// key=value lines instead of a table.
    #[arg(long)]
    kv: bool,
}

#[derive(Args)]
struct EnergyArgs {
    /// Measure one recorded run (needs --trace).
    #[arg(long, requires = "trace")]
    netlist: Option<PathBuf>,
    #[arg(long, requires = "netlist")]
    trace: Option<PathBuf>,
    /// Adder precision for the random-addition average.
    #[arg(long, default_value = "4,4,4,4")]
    precision: PrecisionVector,
    #[arg(long, default_value_t = 10_000)]
    samples: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Steps charged per addition.
    #[arg(long, default_value_t = DEFAULT_EXECUTION_WINDOW)]
    window: u32,
    /// Joules per spike.
    #[arg(long)]
    e_spike: Option<f64>,
    /// Seconds per step.
    #[arg(long)]
    step_period: Option<f64>,
    /// Idle watts per neuron.
    #[arg(long, default_value_t = 0.0)]
    p_idle_neuron: f64,
    /// Idle watts per synapse.
    #[arg(long, default_value_t = 0.0)]
    p_idle_synapse: f64,
}

#[derive(Args)]
struct FuncArgs {
    #[command(flatten)]
    circuit: CircuitArgs,
    /// Inputs in operand order; repeat for sum-tree.
    #[arg(long, allow_hyphen_values = true)]
    x: Vec<DyadicValue>,
    #[arg(long)]
    trace: Option<PathBuf>,
}

fn parse_named(s: &str) -> Result<(String, DyadicValue), String> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| format!("expected name=value, got {s:?}"))?;
    let value = value.parse().map_err(|e: Error| e.to_string())?;
    Ok((name.to_string(), value))
}

enum Failure {
    Usage(String),
    Verification,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn read(path: &PathBuf) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn write(path: &PathBuf, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

enum Built {
    Adder(Network),
    Function(Box<FunctionCircuit>),
}

impl Built {
    fn network(&self) -> &Network {
        match self {
            Built::Adder(net) => net,
            Built::Function(f) => &f.network,
        }
    }
}

fn build(args: &CircuitArgs) -> Result<Built, Failure> {
    let p = args.precision;
    if args.kind == "adder" {
        return Ok(Built::Adder(build_adder(p)?.0));
    }
    let kind: FunctionKind = args.kind.parse()?;
    let circuit = match kind {
        FunctionKind::Constant => {
            let k = args
                .k
                .ok_or_else(|| Failure::Usage("constant needs --k".into()))?;
            build_constant(k, p)?
        }
        FunctionKind::Successor => build_successor(p)?,
        FunctionKind::Predecessor => build_predecessor(p)?,
        FunctionKind::Negate => build_negate(p)?,
        FunctionKind::SumTree => build_sum_tree(args.n, p)?,
    };
    Ok(Built::Function(Box::new(circuit)))
}

fn print_outputs(outputs: &BTreeMap<String, DyadicValue>) {
    let single = outputs.len() == 1;
    for (name, v) in outputs {
        println!("{name}={v}");
        if single {
            println!("value={}", v.value());
        } else {
            println!("{name}.value={}", v.value());
        }
    }
}

fn cmd_build(args: BuildArgs) -> Result<(), Failure> {
    let text = emit_netlist(build(&args.circuit)?.network());
    match args.output {
        Some(path) => write(&path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let program = NetlistProgram::new(parse_netlist(&read(&args.netlist)?)?)?;
    let mut values = BTreeMap::new();
    if let Some(x) = args.x {
        values.insert("x".to_string(), x);
    }
    if let Some(y) = args.y {
        values.insert("y".to_string(), y);
    }
    values.extend(args.inputs);
    let start = Instant::now();
    let (outputs, trace) = program.run(&values)?;
    eprintln!("elapsed={:?}", start.elapsed());
    print_outputs(&outputs);
    println!("ready_step={}", program.ready_step);
    println!("spikes={}", trace.len());
    if let Some(path) = args.trace {
        write(&path, &emit_trace(&trace))?;
    }
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> Result<(), Failure> {
    precision_for_bits(args.bits)?;
    let mode = match args.samples {
        Some(n) => VerifyMode::Samples(n),
        None if args.bits == 8 => VerifyMode::Exhaustive,
        None => VerifyMode::Samples(10_000),
    };
    let report = verify_bits(args.bits, mode, args.seed)?;
    println!("bits={}", args.bits);
    print!("{}", report.to_kv());
    eprintln!("elapsed={:?}", report.elapsed);
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

fn cmd_complexity(args: ComplexityArgs) -> Result<(), Failure> {
    let rows = complexity_table(args.max_p)?;
    if args.kv {
        print!("{}", complexity_kv(&rows));
    } else {
        print!("{}", format_complexity_table(&rows));
    }
    Ok(())
}

fn cmd_energy(args: EnergyArgs) -> Result<(), Failure> {
    let defaults = EnergyModel::default();
    let model = EnergyModel::new(
        args.e_spike.unwrap_or(defaults.e_spike),
        args.p_idle_neuron,
        args.p_idle_synapse,
        args.step_period.unwrap_or(defaults.step_period),
    )?;
    if let (Some(netlist), Some(trace)) = (&args.netlist, &args.trace) {
        let net = parse_netlist(&read(netlist)?)?;
        let trace = parse_trace(&read(trace)?)?;
        print!("{}", estimate_energy(&trace, &net, &model).to_kv());
        return Ok(());
    }
    let start = Instant::now();
    let stats = average_addition(args.precision, args.samples, args.seed, &model, args.window)?;
    eprintln!("elapsed={:?}", start.elapsed());
    print!("{}", stats.to_kv());
    Ok(())
}

fn cmd_func(args: FuncArgs) -> Result<(), Failure> {
    let Built::Function(circuit) = build(&args.circuit)? else {
        return Err(Failure::Usage(
            "func needs a function kind; use `run` for the adder".into(),
        ));
    };
    let (value, trace) = circuit.run(&args.x)?;
    print_outputs(&BTreeMap::from([("z".to_string(), value)]));
    println!("virtual_neurons={}", circuit.virtual_neuron_count());
    println!("ready_step={}", circuit.output.ready_step);
    println!("spikes={}", trace.len());
    if let Some(path) = args.trace {
        write(&path, &emit_trace(&trace))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Build(a) => cmd_build(a),
        Command::Run(a) => cmd_run(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Complexity(a) => cmd_complexity(a),
        Command::Energy(a) => cmd_energy(a),
        Command::Func(a) => cmd_func(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
