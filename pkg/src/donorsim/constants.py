"""Physical constants in the package's canonical units (MHz, mT, K, s)."""

import scipy.constants as _sc

# Bohr magneton over Planck constant: GHz/T == MHz/mT.
MU_B_MHZ_PER_MT = _sc.physical_constants["Bohr magneton in Hz/T"][0] * 1e-9

# Nuclear magneton over Planck constant, MHz/mT.
MU_N_MHZ_PER_MT = _sc.physical_constants["nuclear magneton in MHz/T"][0] * 1e-3

# h/kB expressed as kelvin per MHz: E[MHz] * H_OVER_KB_K_PER_MHZ / T[K] is the
# dimensionless Boltzmann exponent.
H_OVER_KB_K_PER_MHZ = _sc.h / _sc.k * 1e6

# Fixed unit convention for energy conversion (see cli.convert_units):
# 1 neV corresponds to 0.2417990 MHz.
MHZ_PER_NEV = 0.2417990
NEV_PER_UEV = 1000.0
