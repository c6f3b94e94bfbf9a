"""Desk-scale Gaussian boson sampling simulation and verification workbench.

Subpackage map:

- gaussian: moment-block states, circuit specs, evolution primitives
- threshold: exact click-pattern probabilities (inclusion-exclusion kernel)
- samplers: exact GBS sampler plus the four adversarial mockup models
- fock: truncated Fock-space brute-force oracle
- validation: Bayesian, correlation, nonclassicality, and HOG test battery
- cost: classical-cost and advantage-ratio estimates
- config / io / pipeline / cli: experiment configs, file codecs, orchestration
"""

__version__ = "0.1.0"
