"""Free Spectra - worked examples as experiments."""

from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

from projects.free_spectra.algorithms.density import (
    ProblemSpec,
    auto_grid,
    cdf_from_density,
    density_grid,
    moments_from_density,
)
from projects.free_spectra.algorithms.linearize import (
    reference_linearization,
    reference_polynomial,
    selfadjoint_linearize,
    verify_linearization,
)
from projects.free_spectra.algorithms.oracle import CumulantSpec, poly_moments
from projects.free_spectra.algorithms.rmt import EnsembleSpec, empirical_moments, empirical_spectrum, ks_distance, parse_ensemble
from projects.free_spectra.algorithms.subordination import SolverConfig
from shared.base import BaseExperiment, BaseProject, ExperimentResult
from shared.config import get_config
from shared.metrics import MetricsCollector


@dataclass(frozen=True)
class WorkedExample:
    name: str
    ensembles: Tuple[str, ...]
    description: str


EXAMPLES: Dict[str, WorkedExample] = {
    "anticommutator": WorkedExample(
        "anticommutator", ("gue", "gue"), "x1*x2 + x2*x1 for two free semicirculars"
    ),
    "perturbed_anticommutator": WorkedExample(
        "perturbed_anticommutator",
        ("gue", "wishart(1)"),
        "x1*x2 + x2*x1 + x1^2 for a semicircular and a free Poisson element",
    ),
    "cubic_three_variable": WorkedExample(
        "cubic_three_variable",
        ("gue", "gue", "wishart(1)"),
        "x1*x2*x1 + x2*x3*x2 + x3*x1*x3 for two semicirculars and a free Poisson element",
    ),
}


class WorkedExampleExperiment(BaseExperiment):
    """Pipeline density, Monte Carlo spectrum and moment oracle for one worked example."""

    def __init__(
        self,
        example: str,
        n: Optional[int] = None,
        reps: Optional[int] = None,
        seed: Optional[int] = None,
        grid_points: Optional[int] = None,
        epsilon: Optional[float] = None,
        k_max: int = 4,
        workers: Optional[int] = None,
        **kwargs,
    ):
        if example not in EXAMPLES:
            raise ValueError(f"Unknown example: {example}. Available: {list(EXAMPLES)}")
        config = get_config()
        params = dict(
            n=n or config.MC_SIZE,
            reps=reps or config.MC_REPS,
            seed=config.DEFAULT_SEED if seed is None else seed,
            grid_points=grid_points or config.GRID_POINTS,
            epsilon=epsilon or config.DENSITY_EPSILON,
            k_max=k_max,
        )
        super().__init__(example, **params, **kwargs)
        self.example = EXAMPLES[example]
        self.workers = workers

    def setup(self) -> None:
        self.metrics = MetricsCollector()
        self.p = reference_polynomial(self.example.name)
        self.ensembles = tuple(parse_ensemble(e) for e in self.example.ensembles)
        self.measures = tuple(e.limit_measure() for e in self.ensembles)

    def run(self) -> Dict[str, Any]:
        params = self.params
        with self.metrics.time("linearize"):
            lin = selfadjoint_linearize(self.p, method="compact")
            reference = reference_linearization(self.example.name)
            report = verify_linearization(reference, self.p, trials=20, rng_seed=params["seed"])

        grid = auto_grid(self.p, self.measures, points=params["grid_points"])
        spec = ProblemSpec(self.p, self.measures, grid=grid, epsilon=params["epsilon"], solver=SolverConfig())
        with self.metrics.time("density"):
            curve = density_grid(spec, workers=self.workers)

        ensemble = EnsembleSpec(self.ensembles, n=params["n"], reps=params["reps"], seed=params["seed"])
        with self.metrics.time("monte_carlo"):
            eigenvalues = empirical_spectrum(self.p, ensemble, workers=self.workers)
        ks = ks_distance(eigenvalues, cdf_from_density(curve))

        k_max = params["k_max"]
        with self.metrics.time("oracle"):
            oracle = poly_moments(self.p, CumulantSpec.from_measures(self.measures), k_max)
        table = moment_table(moments_from_density(curve, k_max), empirical_moments(eigenvalues, k_max), oracle)

        return {
            "dimension": lin.dim,
            "reference_check": report.to_dict(),
            "curve": curve,
            "eigenvalues": eigenvalues,
            "ks": ks,
            "moments": table,
        }

    def collect_metrics(self, output: Dict[str, Any]) -> Dict[str, float]:
        timings = {t.name: t.duration for t in self.metrics.timings}
        return {
            "ks": output["ks"],
            "mass": output["curve"].mass,
            "linearization_residual": output["reference_check"]["max_corner_residual"],
            **{f"{name}_time": value for name, value in timings.items()},
        }

    def teardown(self) -> None:
        pass


def moment_table(
    pipeline: List[float], empirical: List[float], oracle: Optional[List[float]] = None
) -> List[Dict[str, Optional[float]]]:
    oracle = oracle if oracle is not None else [None] * len(pipeline)
    return [
        {"k": k, "pipeline": a, "empirical": b, "oracle": c}
        for k, (a, b, c) in enumerate(zip(pipeline, empirical, oracle), start=1)
    ]


class FreeSpectraProject(BaseProject):
    PROJECT_NAME = "free_spectra"
    VERSION = "1.0.0"

    def get_description(self) -> str:
        return "Spectral distributions of self-adjoint polynomials in free random variables."

    def get_experiments(self) -> List[str]:
        return list(EXAMPLES)

    def run_experiment(self, name: str, **kwargs) -> ExperimentResult:
        if name not in EXAMPLES:
            raise ValueError(f"Unknown experiment: {name}")
        result = WorkedExampleExperiment(name, **kwargs).execute()
        self.experiments.append(result)
        return result
