"""LDA via collapsed Gibbs sampling, UMass coherence, and topic-count selection."""
from .coherence import (
    Coherence,
    CoherenceCurve,
    coherence_curve,
    plateau_k,
    select_k,
    umass_coherence,
    umass_topic,
)
from .model import (
    GibbsSampler,
    LdaConfig,
    LdaConfigError,
    LdaModel,
    TopicSummary,
    fit_lda,
    top_terms,
)

__all__ = [
    "Coherence", "CoherenceCurve", "GibbsSampler", "LdaConfig", "LdaConfigError", "LdaModel",
    "TopicSummary", "coherence_curve", "fit_lda", "plateau_k", "select_k", "top_terms",
    "umass_coherence", "umass_topic",
]
