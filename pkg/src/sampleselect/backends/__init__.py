"""Generation backends: interfaces, decoding algorithms, local deterministic
backends, the synthetic fact-slot rig, and the remote wire-protocol client."""

from sampleselect.backends.base import (
    CompletionRequest,
    CompletionResult,
    DistributionBackend,
    SamplingBackend,
    derive_seed,
)
from sampleselect.backends.decode import beam_search, greedy_decode, nucleus_sample
from sampleselect.backends.local import (
    RandomDistributionBackend,
    ScriptedBackend,
    TableDistributionBackend,
)
from sampleselect.backends.remote import RemoteCompletionBackend
from sampleselect.backends.synthetic import SyntheticHallucinationBackend

__all__ = [
    "CompletionRequest",
    "CompletionResult",
    "DistributionBackend",
    "RandomDistributionBackend",
    "RemoteCompletionBackend",
    "SamplingBackend",
    "ScriptedBackend",
    "SyntheticHallucinationBackend",
    "TableDistributionBackend",
    "beam_search",
    "derive_seed",
    "greedy_decode",
    "nucleus_sample",
]
