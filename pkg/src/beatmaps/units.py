"""Physical constants and unit conversions used throughout the package.

Times are in fs, wavenumbers in cm^-1 and wavelengths in nm.
"""

import numpy as np

from .errors import NonPositive

#: speed of light in cm/fs
C_CM_PER_FS = 2.99792458e-5
#: Boltzmann constant in cm^-1/K
KB_CM_PER_K = 0.6950348


def nm_to_wavenumber(wavelength_nm):
    """Convert wavelength in nm to wavenumber in cm^-1 (1e7 / lambda)."""
    lam = np.asarray(wavelength_nm, dtype=float)
    if np.any(~(lam > 0)):
        raise NonPositive(f"wavelength must be > 0 nm, got {wavelength_nm!r}")
    out = 1e7 / lam
    return float(out) if out.ndim == 0 else out


def wavenumber_to_nm(wavenumber_cm):
    """Convert wavenumber in cm^-1 to wavelength in nm."""
    nu = np.asarray(wavenumber_cm, dtype=float)
    if np.any(~(nu > 0)):
        raise NonPositive(f"wavenumber must be > 0 cm^-1, got {wavenumber_cm!r}")
    out = 1e7 / nu
    return float(out) if out.ndim == 0 else out


def wavenumber_to_per_fs(nu_cm):
    """Ordinary frequency in 1/fs for a wavenumber in cm^-1."""
    return C_CM_PER_FS * np.asarray(nu_cm, dtype=float)


def wavenumber_to_rad_per_fs(nu_cm):
    """Angular frequency in rad/fs for a wavenumber in cm^-1."""
    return 2 * np.pi * C_CM_PER_FS * np.asarray(nu_cm, dtype=float)


def period_to_wavenumber(period_fs):
    """Wavenumber spacing whose beat has the given period: 1/(c*period)."""
    return 1.0 / (C_CM_PER_FS * period_fs)
