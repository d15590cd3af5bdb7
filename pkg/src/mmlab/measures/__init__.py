"""Ball volumes, deviation measures, profiles, cone masses and the measure inequalities."""

from .ball import ball_volume
from .checks import (DeficitRecord, ExchangeRecord, MeanCurvatureRecord, MeasureSpec, bonk_lang_check,
                     exchange_check, mean_curvature_check)
from .cone import cone_mass, halfspace_boundary_constant, omega
from .deviation import DeviationProfile, Fit, deviation, fit_profile, profile

__all__ = ["ball_volume", "DeficitRecord", "ExchangeRecord", "MeanCurvatureRecord", "MeasureSpec",
           "bonk_lang_check", "exchange_check", "mean_curvature_check", "cone_mass",
           "halfspace_boundary_constant", "omega", "DeviationProfile", "Fit", "deviation", "fit_profile",
           "profile"]
