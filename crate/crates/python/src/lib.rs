//! Python bindings for `vneuron`.
//!
//! Values cross the boundary as exact decimal strings so no precision is lost.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use vneuron::circuit::{build_adder, structural_counts, InputPort};
use vneuron::codec::{decode_output, encode_value, stimulus_for};
use vneuron::metrics::{average_addition, complexity_table as table, DEFAULT_EXECUTION_WINDOW};
use vneuron::mu;
use vneuron::netlist::emit_netlist;
use vneuron::verify::{verify_bits, VerifyMode};
use vneuron::{simulate, DyadicValue, EnergyModel, FunctionCircuit, Network, PrecisionVector, VirtualNeuronHandle};

fn err(e: vneuron::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Precision vector `(pos_int, pos_frac, neg_int, neg_frac)`.
#[pyclass(name = "Precision", frozen, eq, from_py_object, module = "vneuron_py")]
#[derive(Clone, PartialEq)]
struct Precision(PrecisionVector);

#[pymethods]
impl Precision {
    #[new]
    fn new(pos_int: u32, pos_frac: u32, neg_int: u32, neg_frac: u32) -> Self {
        Precision(PrecisionVector::new(pos_int, pos_frac, neg_int, neg_frac))
    }

    /// Parses `"a,b,c,d"`.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        text.parse().map(Precision).map_err(err)
    }

    #[getter]
    fn pos_bits(&self) -> u32 {
        self.0.pos_bits()
    }

    #[getter]
    fn neg_bits(&self) -> u32 {
        self.0.neg_bits()
    }

    fn as_tuple(&self) -> (u32, u32, u32, u32) {
        let p = self.0;
        (p.pos_int, p.pos_frac, p.neg_int, p.neg_frac)
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Precision({})", self.0)
    }
}

/// Dual-rail value; built from `"v"` or `"pos,neg"`.
#[pyclass(name = "Value", frozen, eq, from_py_object, module = "vneuron_py")]
#[derive(Clone, PartialEq)]
struct Value(DyadicValue);

#[pymethods]
impl Value {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        text.parse().map(Value).map_err(err)
    }

    #[getter]
    fn pos(&self) -> String {
        self.0.pos().to_string()
    }

    #[getter]
    fn neg(&self) -> String {
        self.0.neg().to_string()
    }

    #[getter]
    fn value(&self) -> String {
        self.0.value().to_string()
    }

    fn __float__(&self) -> f64 {
        self.0.value().to_f64()
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Value('{}')", self.0)
    }
}

#[derive(FromPyObject)]
enum ValueArg {
    Value(Value),
    Text(String),
}

impl ValueArg {
    fn get(self) -> PyResult<DyadicValue> {
        match self {
            ValueArg::Value(v) => Ok(v.0),
            ValueArg::Text(s) => s.parse().map_err(err),
        }
    }
}

#[derive(FromPyObject)]
enum PrecisionArg {
    Precision(Precision),
    Text(String),
}

impl PrecisionArg {
    fn get(self) -> PyResult<PrecisionVector> {
        match self {
            PrecisionArg::Precision(p) => Ok(p.0),
            PrecisionArg::Text(s) => s.parse().map_err(err),
        }
    }
}

#[pyclass(name = "Adder", frozen, module = "vneuron_py")]
struct Adder {
    network: Network,
    handle: VirtualNeuronHandle,
}

#[pymethods]
impl Adder {
    #[new]
    fn new(precision: PrecisionArg) -> PyResult<Self> {
        let (network, handle) = build_adder(precision.get()?).map_err(err)?;
        Ok(Adder { network, handle })
    }

    #[getter]
    fn neurons(&self) -> usize {
        structural_counts(&self.network).0
    }

    #[getter]
    fn synapses(&self) -> usize {
        structural_counts(&self.network).1
    }

    #[getter]
    fn ready_step(&self) -> u32 {
        self.handle.ready_step
    }

    /// Returns the sum and the spike trace as `(step, neuron)` pairs.
    fn run(&self, x: ValueArg, y: ValueArg) -> PyResult<(Value, Vec<(u32, usize)>)> {
        let mut stim = stimulus_for(&self.handle, InputPort::X, &x.get()?).map_err(err)?;
        stim.extend(stimulus_for(&self.handle, InputPort::Y, &y.get()?).map_err(err)?);
        let trace = simulate(&self.network, &stim, self.handle.ready_step as i64).map_err(err)?;
        let z = decode_output(&self.handle, &trace).map_err(err)?;
        let spikes = trace.events.iter().map(|e| (e.step, e.neuron)).collect();
        Ok((Value(z), spikes))
    }

    fn add(&self, x: ValueArg, y: ValueArg) -> PyResult<Value> {
        self.run(x, y).map(|(z, _)| z)
    }

    fn netlist(&self) -> String {
        emit_netlist(&self.network)
    }
}

#[pyclass(name = "Function", frozen, module = "vneuron_py")]
struct Function(FunctionCircuit);

#[pymethods]
impl Function {
    #[staticmethod]
    fn constant(k: ValueArg, precision: PrecisionArg) -> PyResult<Self> {
        mu::build_constant(k.get()?, precision.get()?).map(Function).map_err(err)
    }

    #[staticmethod]
    fn successor(precision: PrecisionArg) -> PyResult<Self> {
        mu::build_successor(precision.get()?).map(Function).map_err(err)
    }

    #[staticmethod]
    fn predecessor(precision: PrecisionArg) -> PyResult<Self> {
        mu::build_predecessor(precision.get()?).map(Function).map_err(err)
    }

    #[staticmethod]
    fn negate(precision: PrecisionArg) -> PyResult<Self> {
        mu::build_negate(precision.get()?).map(Function).map_err(err)
    }

    #[staticmethod]
    fn sum_tree(n: usize, precision: PrecisionArg) -> PyResult<Self> {
        mu::build_sum_tree(n, precision.get()?).map(Function).map_err(err)
    }

    #[getter]
    fn kind(&self) -> String {
        self.0.kind.to_string()
    }

    #[getter]
    fn arity(&self) -> usize {
        self.0.arity()
    }

    #[getter]
    fn virtual_neurons(&self) -> usize {
        self.0.virtual_neuron_count()
    }

    #[getter]
    fn levels(&self) -> usize {
        self.0.levels
    }

    #[getter]
    fn ready_step(&self) -> u32 {
        self.0.output.ready_step
    }

    #[pyo3(signature = (*inputs))]
    fn __call__(&self, inputs: Vec<ValueArg>) -> PyResult<Value> {
        let inputs = inputs.into_iter().map(ValueArg::get).collect::<PyResult<Vec<_>>>()?;
        self.0.evaluate(&inputs).map(Value).map_err(err)
    }

    fn netlist(&self) -> String {
        emit_netlist(&self.0.network)
    }
}

/// Rows `(P, neurons, synapses, steps)` for `P = 1, 2, 4, ... <= max_p`.
#[pyfunction]
#[pyo3(signature = (max_p = 128))]
fn complexity_table(max_p: u32) -> PyResult<Vec<(u32, usize, usize, u32)>> {
    let rows = table(max_p).map_err(err)?;
    Ok(rows
        .into_iter()
        .map(|r| (r.precision, r.neurons, r.synapses, r.steps))
        .collect())
}

/// Exhaustive at 8 bits when `samples` is None, seeded sampling otherwise.
#[pyfunction]
#[pyo3(signature = (bits, samples = None, seed = 1))]
fn verify<'py>(py: Python<'py>, bits: u32, samples: Option<u64>, seed: u64) -> PyResult<Bound<'py, PyDict>> {
    let mode = samples.map_or(VerifyMode::Exhaustive, VerifyMode::Samples);
    let report = py.detach(|| verify_bits(bits, mode, seed)).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("precision", report.precision.to_string())?;
    out.set_item("cases", report.cases)?;
    out.set_item("failures", report.failures.len())?;
    out.set_item("seed", report.seed)?;
    out.set_item("passed", report.passed())?;
    out.set_item("elapsed", report.elapsed.as_secs_f64())?;
    Ok(out)
}

/// Mean spikes, energy and power of random additions under the default model.
#[pyfunction]
#[pyo3(signature = (precision, samples = 1000, seed = 1))]
fn average_energy<'py>(
    py: Python<'py>,
    precision: PrecisionArg,
    samples: u64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let p = precision.get()?;
    let stats = py
        .detach(|| average_addition(p, samples, seed, &EnergyModel::default(), DEFAULT_EXECUTION_WINDOW))
        .map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("mean_total_spikes", stats.mean_total_spikes)?;
    out.set_item("mean_network_spikes", stats.mean_network_spikes)?;
    out.set_item("energy_j", stats.mean_energy_joules)?;
    out.set_item("power_w", stats.mean_power_watts)?;
    out.set_item("steps", stats.steps)?;
    Ok(out)
}

/// `(s mod 2, s >= 2)` for a bit group whose inputs sum to `s`.
#[pyfunction]
fn bit_group_response(s: u8) -> PyResult<(u8, u8)> {
    vneuron::snn::bit_group_response(s).map_err(err)
}

/// MSB-first magnitude bit strings of both rails.
#[pyfunction]
fn encode(value: ValueArg, precision: PrecisionArg) -> PyResult<(String, String)> {
    let (pos, neg) = encode_value(&value.get()?, &precision.get()?).map_err(err)?;
    Ok((pos.to_string(), neg.to_string()))
}

#[pymodule]
fn vneuron_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Precision>()?;
    m.add_class::<Value>()?;
    m.add_class::<Adder>()?;
    m.add_class::<Function>()?;
    m.add_function(wrap_pyfunction!(complexity_table, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(average_energy, m)?)?;
    m.add_function(wrap_pyfunction!(bit_group_response, m)?)?;
    m.add_function(wrap_pyfunction!(encode, m)?)?;
    Ok(())
}
