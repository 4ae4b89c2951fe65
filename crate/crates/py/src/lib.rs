//! Python bindings. Rationals go in as anything whose `str()` parses
//! (`int`, `fractions.Fraction`, `"3/8"`) and come out as `Fraction`.

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use lipmart_core::interval_re::LinearOracle;
use lipmart_core::martingale::{
    cdf_at_dyadic, cdf_bounds, cdf_fn, read_staged_jsonl, read_table_jsonl, write_staged_jsonl,
    write_table_jsonl, Bounds, MartingaleTable,
};
use lipmart_core::oscillator::{
    cdf_slope_bounds, savings_transform, strategy_by_name, trace_path, Oscillator, Phase, Savings,
    StrategyMartingale,
};
use lipmart_core::rat::{self, Rat};
use lipmart_core::schnorr::{
    interval_set, refine_test, DyadicCubeSet, PointTest, RefinedTest, Target,
};
use lipmart_core::synthesis::{
    gated_preimage, preimage_from_staged, synthesize_signed, variation_preimage,
    variation_staircase, SignedSynthesis, SynthesisOptions, ZigzagSpec,
};
use lipmart_core::{gen, BinWord, Dyadic, Error};

create_exception!(lipmart, LipmartError, PyValueError);

fn err(e: Error) -> PyErr {
    LipmartError::new_err(format!("[{}] {e}", e.code()))
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for lipmart_core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(err)
    }
}

fn rat_in(x: &Bound<'_, PyAny>) -> PyResult<Rat> {
    rat::parse(x.str()?.to_str()?).py()
}

fn dyadic_in(x: &Bound<'_, PyAny>) -> PyResult<Dyadic> {
    Dyadic::new(rat_in(x)?).py()
}

fn rats_in(xs: &[Bound<'_, PyAny>]) -> PyResult<Vec<Rat>> {
    xs.iter().map(rat_in).collect()
}

fn frac<'py>(py: Python<'py>, x: &Rat) -> PyResult<Bound<'py, PyAny>> {
    py.import("fractions")?
        .getattr("Fraction")?
        .call1((rat::fmt(x),))
}

fn fracs<'py>(py: Python<'py>, xs: &[Rat]) -> PyResult<Vec<Bound<'py, PyAny>>> {
    xs.iter().map(|x| frac(py, x)).collect()
}

fn word(s: &str) -> PyResult<BinWord> {
    BinWord::parse(s).py()
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Piecewise-linear or step function on `[0,1]` with dyadic breakpoints.
#[pyclass(name = "PiecewiseFn", module = "lipmart", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyFn(lipmart_core::PiecewiseFn);

#[pymethods]
impl PyFn {
    #[staticmethod]
    fn identity() -> Self {
        PyFn(lipmart_core::PiecewiseFn::identity())
    }

    #[staticmethod]
    fn constant(c: &Bound<'_, PyAny>) -> PyResult<Self> {
        Ok(PyFn(lipmart_core::PiecewiseFn::constant(rat_in(c)?)))
    }

    #[staticmethod]
    fn linear(breakpoints: Vec<Bound<'_, PyAny>>, values: Vec<Bound<'_, PyAny>>) -> PyResult<Self> {
        let bs = breakpoints.iter().map(dyadic_in).collect::<PyResult<_>>()?;
        Ok(PyFn(
            lipmart_core::PiecewiseFn::linear(bs, rats_in(&values)?).py()?,
        ))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyFn(lipmart_core::PiecewiseFn::from_json(text).py()?))
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    fn __call__<'py>(&self, py: Python<'py>, x: &Bound<'py, PyAny>) -> PyResult<Bound<'py, PyAny>> {
        frac(py, &self.0.eval(&rat_in(x)?).py()?)
    }

    #[pyo3(signature = (p = None))]
    fn total_variation<'py>(
        &self,
        py: Python<'py>,
        p: Option<&Bound<'py, PyAny>>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let p = match p {
            Some(p) => rat_in(p)?,
            None => rat::int(1),
        };
        frac(py, &self.0.total_variation(&p).py()?)
    }

    fn sample<'py>(
        &self,
        py: Python<'py>,
        depth: u32,
    ) -> PyResult<Vec<(Bound<'py, PyAny>, Bound<'py, PyAny>)>> {
        self.0
            .sample(depth)
            .py()?
            .iter()
            .map(|(x, y)| Ok((frac(py, x.value())?, frac(py, y)?)))
            .collect()
    }

    fn breakpoints<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyAny>>> {
        self.0
            .breakpoints()
            .iter()
            .map(|b| frac(py, b.value()))
            .collect()
    }

    fn values<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyAny>>> {
        fracs(py, self.0.values())
    }

    fn slopes<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyAny>>> {
        fracs(py, &self.0.segment_slopes())
    }

    fn __repr__(&self) -> String {
        format!("PiecewiseFn({} breakpoints)", self.0.breakpoints().len())
    }
}

/// Nonnegative fair table on the binary tree up to a fixed depth.
#[pyclass(name = "MartingaleTable", module = "lipmart", frozen, from_py_object)]
#[derive(Clone)]
struct PyTable(MartingaleTable);

#[pymethods]
impl PyTable {
    /// `levels[l][i]` is the value at the `i`-th word of length `l`.
    #[new]
    fn new(levels: Vec<Vec<Bound<'_, PyAny>>>) -> PyResult<Self> {
        let levels = levels.iter().map(|l| rats_in(l)).collect::<PyResult<_>>()?;
        let t = lipmart_core::martingale::TreeTable::from_levels(levels).py()?;
        Ok(PyTable(MartingaleTable::new(t).py()?))
    }

    #[staticmethod]
    fn from_jsonl(text: &str) -> PyResult<Self> {
        Ok(PyTable(
            MartingaleTable::new(read_table_jsonl(text).py()?).py()?,
        ))
    }

    #[staticmethod]
    #[pyo3(signature = (seed, depth, root = None))]
    fn random(seed: u64, depth: usize, root: Option<&Bound<'_, PyAny>>) -> PyResult<Self> {
        let root = match root {
            Some(r) => rat_in(r)?,
            None => rat::int(1),
        };
        Ok(PyTable(
            gen::fair_table(&mut rng(seed), depth, root, 4).py()?,
        ))
    }

    fn to_jsonl(&self) -> String {
        write_table_jsonl(self.0.table())
    }

    #[getter]
    fn depth(&self) -> usize {
        self.0.depth()
    }

    fn __getitem__<'py>(&self, py: Python<'py>, w: &str) -> PyResult<Bound<'py, PyAny>> {
        frac(py, self.0.get(&word(w)?).py()?)
    }

    /// `μ(σ) = 2^{-|σ|} M(σ)`.
    fn measure<'py>(&self, py: Python<'py>, w: &str) -> PyResult<Bound<'py, PyAny>> {
        frac(py, &self.0.measure_of_word(&word(w)?).py()?)
    }

    fn cdf(&self) -> PyFn {
        PyFn(cdf_fn(self.0.table()))
    }

    fn cdf_at<'py>(&self, py: Python<'py>, x: &Bound<'py, PyAny>) -> PyResult<Bound<'py, PyAny>> {
        frac(py, &cdf_at_dyadic(&self.0, &dyadic_in(x)?).py()?)
    }

    /// Enclosure of `cdf(y) − cdf(x)` for arbitrary rationals, given density
    /// bounds `c ≤ M ≤ d` (the table's own range by default).
    #[pyo3(signature = (x, y, c = None, d = None))]
    fn cdf_bounds<'py>(
        &self,
        py: Python<'py>,
        x: &Bound<'py, PyAny>,
        y: &Bound<'py, PyAny>,
        c: Option<&Bound<'py, PyAny>>,
        d: Option<&Bound<'py, PyAny>>,
    ) -> PyResult<(Bound<'py, PyAny>, Bound<'py, PyAny>)> {
        let (lo, hi) = self.0.min_max();
        let c = c.map(rat_in).transpose()?.unwrap_or(lo);
        let d = d.map(rat_in).transpose()?.unwrap_or(hi);
        let b = Bounds::new(c, d).py()?;
        b.check(&self.0).py()?;
        let enc = cdf_bounds(&self.0, &b, &rat_in(x)?, &rat_in(y)?).py()?;
        Ok((frac(py, &enc.lo)?, frac(py, &enc.hi)?))
    }

    fn savings(&self) -> PyResult<Self> {
        Ok(PyTable(savings_transform(&self.0).py()?))
    }

    fn __repr__(&self) -> String {
        format!("MartingaleTable(depth={})", self.0.depth())
    }
}

/// Nondecreasing sequence of fair tables of a common depth.
#[pyclass(
    name = "StagedMartingale",
    module = "lipmart",
    frozen,
    skip_from_py_object
)]
#[derive(Clone)]
struct PyStaged(lipmart_core::martingale::StagedMartingale);

#[pymethods]
impl PyStaged {
    #[new]
    fn new(stages: Vec<PyTable>) -> PyResult<Self> {
        let stages = stages.into_iter().map(|t| t.0).collect();
        Ok(PyStaged(
            lipmart_core::martingale::StagedMartingale::new(stages).py()?,
        ))
    }

    #[staticmethod]
    fn from_jsonl(text: &str) -> PyResult<Self> {
        Ok(PyStaged(read_staged_jsonl(text).py()?))
    }

    #[staticmethod]
    #[pyo3(signature = (seed, depth, stages = 3))]
    fn random(seed: u64, depth: usize, stages: usize) -> PyResult<Self> {
        Ok(PyStaged(
            gen::staged_martingale(&mut rng(seed), depth, stages).py()?,
        ))
    }

    fn to_jsonl(&self) -> String {
        write_staged_jsonl(&self.0)
    }

    #[getter]
    fn depth(&self) -> usize {
        self.0.depth()
    }

    fn __len__(&self) -> usize {
        self.0.stage_count()
    }

    fn stage(&self, s: usize) -> PyResult<PyTable> {
        if s >= self.0.stage_count() {
            return Err(pyo3::exceptions::PyIndexError::new_err(s));
        }
        Ok(PyTable(self.0.stage(s).clone()))
    }
}

/// Outcome of a signed synthesis: `L`, its cdf `g`, and the stage bookkeeping.
#[pyclass(name = "Synthesis", module = "lipmart", frozen)]
struct PySynthesis {
    res: SignedSynthesis,
    g: lipmart_core::PiecewiseFn,
}

#[pymethods]
impl PySynthesis {
    #[getter]
    fn function(&self) -> PyFn {
        PyFn(self.g.clone())
    }

    #[getter]
    fn completed_stages(&self) -> usize {
        self.res.completed_stages()
    }

    #[getter]
    fn partial(&self) -> bool {
        self.res.cap_exceeded
    }

    #[getter]
    fn boundaries(&self) -> Vec<usize> {
        self.res.schedule.boundaries().to_vec()
    }

    fn deficits<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyAny>>> {
        fracs(py, &self.res.deficits)
    }

    fn value<'py>(&self, py: Python<'py>, w: &str) -> PyResult<Bound<'py, PyAny>> {
        frac(py, self.res.l.get(&word(w)?).py()?)
    }

    fn level_variation<'py>(
        &self,
        py: Python<'py>,
        w: &str,
        b: usize,
    ) -> PyResult<Bound<'py, PyAny>> {
        frac(py, &self.res.l.level_variation(&word(w)?, b).py()?)
    }

    fn to_jsonl(&self) -> String {
        write_table_jsonl(self.res.l.table())
    }
}

#[pyfunction]
fn zigzag(p: &Bound<'_, PyAny>, q: &Bound<'_, PyAny>, k: u32) -> PyResult<PyFn> {
    Ok(PyFn(
        ZigzagSpec::new(dyadic_in(p)?, dyadic_in(q)?, k)
            .py()?
            .to_fn(),
    ))
}

#[pyfunction]
fn staircase(alphas: Vec<Bound<'_, PyAny>>) -> PyResult<PyFn> {
    let alphas: Vec<Dyadic> = alphas.iter().map(dyadic_in).collect::<PyResult<_>>()?;
    Ok(PyFn(variation_staircase(&alphas).py()?))
}

#[pyfunction]
#[pyo3(signature = (staged, depth, cap = 24))]
fn synthesize(staged: &PyStaged, depth: usize, cap: usize) -> PyResult<PySynthesis> {
    let opts = SynthesisOptions::new(depth).with_level_cap(cap);
    let res = synthesize_signed(&staged.0, &opts).py()?;
    let g = cdf_fn(res.l.table());
    Ok(PySynthesis { res, g })
}

/// `g` with `V(g, 0, x)` tracking `c·x`; `g` is `c`-Lipschitz.
#[pyfunction]
#[pyo3(signature = (c, depth, cap = 24))]
fn linear_preimage(c: &Bound<'_, PyAny>, depth: usize, cap: usize) -> PyResult<PySynthesis> {
    let pre = variation_preimage(&LinearOracle { c: rat_in(c)? }, depth, cap).py()?;
    Ok(PySynthesis {
        res: pre.synthesis,
        g: pre.g,
    })
}

/// `g` with `V(g, 0, x)` tracking the cdf of the last stage.
#[pyfunction]
#[pyo3(signature = (staged, depth, cap = 24))]
fn staged_preimage(staged: &PyStaged, depth: usize, cap: usize) -> PyResult<PySynthesis> {
    let pre = preimage_from_staged(staged.0.clone(), depth, cap).py()?;
    Ok(PySynthesis {
        res: pre.synthesis,
        g: pre.g,
    })
}

/// Gated synthesis: switch stages only once the measure has spread out.
#[pyfunction]
#[pyo3(signature = (staged, depth, depth_cap = 24, cap = 24))]
fn gated_synthesis(
    staged: &PyStaged,
    depth: usize,
    depth_cap: usize,
    cap: usize,
) -> PyResult<PySynthesis> {
    let pre = gated_preimage(&staged.0, depth, depth_cap, cap).py()?;
    Ok(PySynthesis {
        res: pre.synthesis,
        g: pre.g,
    })
}

/// Walks the oscillator of a named strategy along `target`; returns a dict
/// with `b`, `m`, `phases`, `crossings`, `min_slope`, `max_slope`.
#[pyfunction]
fn oscillate<'py>(py: Python<'py>, strategy: &str, target: &str) -> PyResult<Bound<'py, PyDict>> {
    let osc = Oscillator::from_savings(Savings(StrategyMartingale(
        strategy_by_name(strategy).py()?,
    )));
    let z = word(target)?;
    let trace = trace_path(&osc, &z).py()?;
    let out = PyDict::new(py);
    out.set_item("b", fracs(py, &trace.b)?)?;
    out.set_item("m", fracs(py, &trace.m)?)?;
    let phases: Vec<&str> = trace
        .phases
        .iter()
        .map(|p| match p {
            Phase::Up => "up",
            Phase::Down => "down",
        })
        .collect();
    out.set_item("phases", phases)?;
    out.set_item("crossings", trace.crossings())?;
    if !z.is_empty() {
        let bounds = cdf_slope_bounds(&osc, &z).py()?;
        out.set_item("min_slope", frac(py, &bounds.min_slope)?)?;
        out.set_item("max_slope", frac(py, &bounds.max_slope)?)?;
    }
    Ok(out)
}

/// Finite union of dyadic cubes in `[0,1]^n`.
#[pyclass(name = "CubeSet", module = "lipmart", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyCubeSet(DyadicCubeSet);

#[pymethods]
impl PyCubeSet {
    #[staticmethod]
    fn empty(dim: usize) -> Self {
        PyCubeSet(DyadicCubeSet::empty(dim))
    }

    #[staticmethod]
    fn full(dim: usize) -> Self {
        PyCubeSet(DyadicCubeSet::full(dim))
    }

    #[staticmethod]
    fn interval(a: &Bound<'_, PyAny>, b: &Bound<'_, PyAny>) -> PyResult<Self> {
        Ok(PyCubeSet(
            interval_set(&dyadic_in(a)?, &dyadic_in(b)?).py()?,
        ))
    }

    #[staticmethod]
    fn from_box(lo: Vec<Bound<'_, PyAny>>, hi: Vec<Bound<'_, PyAny>>) -> PyResult<Self> {
        let lo: Vec<Dyadic> = lo.iter().map(dyadic_in).collect::<PyResult<_>>()?;
        let hi: Vec<Dyadic> = hi.iter().map(dyadic_in).collect::<PyResult<_>>()?;
        Ok(PyCubeSet(DyadicCubeSet::from_box(&lo, &hi).py()?))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyCubeSet(DyadicCubeSet::from_json(text).py()?))
    }

    #[staticmethod]
    #[pyo3(signature = (seed, dim, max_level = 4, count = 6))]
    fn random(seed: u64, dim: usize, max_level: u32, count: usize) -> PyResult<Self> {
        Ok(PyCubeSet(
            gen::cube_set(&mut rng(seed), dim, max_level, count).py()?,
        ))
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn measure<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        frac(py, &self.0.measure())
    }

    fn union(&self, other: &Self) -> PyResult<Self> {
        Ok(PyCubeSet(self.0.union(&other.0).py()?))
    }

    fn intersection(&self, other: &Self) -> PyResult<Self> {
        Ok(PyCubeSet(self.0.intersection(&other.0).py()?))
    }

    fn difference(&self, other: &Self) -> PyResult<Self> {
        Ok(PyCubeSet(self.0.difference(&other.0).py()?))
    }

    fn complement(&self) -> Self {
        PyCubeSet(self.0.complement())
    }

    fn is_subset(&self, other: &Self) -> PyResult<bool> {
        self.0.is_subset(&other.0).py()
    }

    fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn __contains__(&self, point: Vec<Bound<'_, PyAny>>) -> PyResult<bool> {
        self.0.contains(&rats_in(&point)?).py()
    }

    /// Maximal cubes, as `(level, index)` pairs.
    fn cubes(&self) -> Vec<(u32, Vec<u64>)> {
        self.0
            .leaves()
            .into_iter()
            .map(|c| (c.level, c.index))
            .collect()
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.0 == other.0
    }

    fn __repr__(&self) -> String {
        format!(
            "CubeSet(dim={}, cubes={})",
            self.0.dim(),
            self.0.leaves().len()
        )
    }
}

/// The nested sets `G_0 ⊇ G_1 ⊇ …` refined from the point test around `z`.
#[pyclass(name = "RefinedTest", module = "lipmart", frozen)]
struct PyRefined {
    g: RefinedTest,
    z: Target,
}

#[pymethods]
impl PyRefined {
    /// `z` is `"1/3"`, `"1/3,2/5"` or `"bits:0110…"`.
    #[new]
    #[pyo3(signature = (z, dim = 1, levels = 6, budget = 64))]
    fn new(z: &str, dim: usize, levels: usize, budget: usize) -> PyResult<Self> {
        let z = Target::parse(z, dim).py()?;
        let g = refine_test(&PointTest::new(z.clone()), levels, budget).py()?;
        Ok(PyRefined { g, z })
    }

    #[getter]
    fn levels(&self) -> usize {
        self.g.m_max()
    }

    #[getter]
    fn partial(&self) -> bool {
        self.g.is_partial()
    }

    fn set(&self, m: usize) -> PyResult<PyCubeSet> {
        Ok(PyCubeSet(self.g.set(m).py()?))
    }

    /// Cubes `C_0 ⊇ C_1 ⊇ …` of the `G_m` containing `z`.
    fn target_cubes(&self) -> PyResult<Vec<String>> {
        Ok(self
            .g
            .target_cubes(&self.z)
            .py()?
            .iter()
            .map(|c| c.to_string())
            .collect())
    }

    /// Average of `Σ_{i ≤ levels} (−1)^i 1_{G_i}` over `C_m`.
    fn cube_average<'py>(&self, py: Python<'py>, m: usize) -> PyResult<Bound<'py, PyAny>> {
        let chain = self.g.target_cubes(&self.z).py()?;
        let c = chain
            .get(m)
            .ok_or_else(|| pyo3::exceptions::PyIndexError::new_err(m))?;
        frac(py, &self.g.cube_average(c, self.g.m_max()).py()?)
    }

    /// `λ(G_i ∩ C_m) / λC_m`.
    fn share<'py>(&self, py: Python<'py>, m: usize, i: usize) -> PyResult<Bound<'py, PyAny>> {
        let chain = self.g.target_cubes(&self.z).py()?;
        let c = chain
            .get(m)
            .ok_or_else(|| pyo3::exceptions::PyIndexError::new_err(m))?;
        frac(py, &self.g.share_in(c, i).py()?)
    }

    /// `‖Σ_{r ≤ i ≤ levels} (−1)^i 1_{G_i}‖₁`.
    fn tail_l1<'py>(&self, py: Python<'py>, r: usize) -> PyResult<Bound<'py, PyAny>> {
        frac(py, &self.g.tail_l1(r, self.g.m_max()).py()?)
    }

    fn measure_violations(&self) -> PyResult<usize> {
        Ok(self.g.measure_violations().py()?.len())
    }
}

#[pymodule]
#[pyo3(name = "lipmart")]
fn lipmart_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("LipmartError", m.py().get_type::<LipmartError>())?;
    m.add_class::<PyFn>()?;
    m.add_class::<PyTable>()?;
    m.add_class::<PyStaged>()?;
    m.add_class::<PySynthesis>()?;
    m.add_class::<PyCubeSet>()?;
    m.add_class::<PyRefined>()?;
    m.add_function(wrap_pyfunction!(zigzag, m)?)?;
    m.add_function(wrap_pyfunction!(staircase, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    m.add_function(wrap_pyfunction!(linear_preimage, m)?)?;
    m.add_function(wrap_pyfunction!(staged_preimage, m)?)?;
    m.add_function(wrap_pyfunction!(gated_synthesis, m)?)?;
    m.add_function(wrap_pyfunction!(oscillate, m)?)?;
    Ok(())
}
