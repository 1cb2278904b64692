# Copyright 2026 The repkd Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Python bindings for the repkd C++ core."""

from ._core import (  # noqa: F401
    ConsistencyError,
    ContractViolation,
    FormatError,
    InvalidConfig,
    InvalidInput,
    MissingArtifact,
    alignment_posterior,
    enumerated_nll,
    enumerated_posterior,
    evaluate,
    expected_phi,
    generate_mock_teacher,
    generate_synth_corpus,
    kd_loss,
    read_alnq,
    read_trep,
    sample_context_variant,
    select_layers,
    train,
    transducer_grad,
    transducer_nll,
    word_error_rate,
    write_alnq,
    write_trep,
)

__all__ = [name for name in dir() if not name.startswith("_")]
