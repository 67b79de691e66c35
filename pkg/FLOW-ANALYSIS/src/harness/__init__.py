"""
Measure-level checks: sampling, Weyl sums, cluster scans.
"""

from .sampling import (
    EmpiricalMeasure,
    SampleDomain,
    SectorMass,
    annulus_mass,
    lambda_zero,
    mass_check,
    sample_mu_a,
    sample_sector,
    sector_mass,
    sector_mass_check,
    sector_membership,
    unit_points,
)
from .weyl import WeylReport, weyl_sums, weyl_test, weyl_test_measure
from .clusters import (
    ClusterReport,
    RegionSpec,
    SemiTorusExample,
    cluster_frame,
    cluster_scan,
    semi_torus_example,
)

__all__ = [
    'EmpiricalMeasure', 'SampleDomain', 'SectorMass', 'annulus_mass', 'lambda_zero', 'mass_check',
    'sample_mu_a', 'sample_sector', 'sector_mass', 'sector_mass_check', 'sector_membership', 'unit_points',
    'WeylReport', 'weyl_sums', 'weyl_test', 'weyl_test_measure',
    'ClusterReport', 'RegionSpec', 'SemiTorusExample', 'cluster_frame', 'cluster_scan', 'semi_torus_example',
]
