# pylint: disable=missing-module-docstring
from pyvhrnn.distributions.bernoulli import BernoulliLogits, bernoulli_log_prob
from pyvhrnn.distributions.gaussian import (
    LOG_STD_MAX,
    LOG_STD_MIN,
    ClampMonitor,
    DiagGaussian,
    clamp_monitor,
    gaussian_kl,
    gaussian_log_prob,
    gaussian_sample,
)
from pyvhrnn.distributions.mixture import GaussMixture, gmm_log_prob
