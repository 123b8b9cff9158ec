"""Time-dependent perturbation theory for charged particles in oscillator traps.

Two perturbative schemes are provided side by side with an exact propagator:
coefficient dynamics over unperturbed eigenstates (gauge dependent), and a
scheme for expectation values of motion invariants driven only by the
physical fields.
"""
from .errors import (ConfigError, DegreeError, DimensionMismatchError, ImpulsiveFieldError,
                     InadmissibleObservableError, InteriorIndexError, NumericalPolicyError,
                     QuasipertError, UndefinedEntryError)
from .hilbert import (HO1D, HO2D, Basis, Constants, Operator, State, build_basis,
                      commutator_bracket, expectation, matrix_element, sym_product)
from .polynomial import Poly
from .profiles import Const, Integral, Linear, Product, Rect, Sinusoid
from .fields import (FieldTerm, GaugeField, GaugeFunction, PhysicalFields, gauge_transform,
                     physical_fields, poly_operator)
from .dirac import (PerturbingHamiltonian, assemble_h1, euler_norm_demo, first_order_amplitude,
                    first_order_amplitudes, gauge_sensitivity, integrate_coefficients,
                    transition_probability)
from .oracle import (exact_expectation, exact_transition, forced_oscillator_reference, gauge_phase,
                     propagate)
from .quasicanon import (ObservableSpec, build_observable, catalog, energy_spec, evolve_expectation,
                         poisson_form_check, rate_operator, verify_unperturbed_invariance,
                         xi_operator, zeta_spec)
from .soperator import consistency_check, s_matrix, transition_probability_s

__version__ = "0.1.0"
