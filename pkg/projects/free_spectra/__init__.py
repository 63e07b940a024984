"""Free Spectra - distributions of self-adjoint polynomials in free random variables."""

from projects.free_spectra.project import EXAMPLES, FreeSpectraProject, WorkedExampleExperiment

__all__ = ["EXAMPLES", "FreeSpectraProject", "WorkedExampleExperiment"]
