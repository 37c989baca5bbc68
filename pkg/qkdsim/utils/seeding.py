# Copyright (c) Nex-AGI. All rights reserved.
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

from dataclasses import dataclass

import numpy as np

SeededRng = np.random.Generator

STREAM_NAMES = ("source", "alice", "bob", "channel", "eve", "public")


@dataclass(frozen=True)
class SessionStreams:
    """Independent RNG streams owned by the actors of one session."""

    source: SeededRng
    alice: SeededRng
    bob: SeededRng
    channel: SeededRng
    eve: SeededRng
    public: SeededRng


def make_rng(seed: int | None) -> SeededRng:
    return np.random.default_rng(seed)


def session_streams(seed: int, salt: int = 0, attempt: int = 0) -> SessionStreams:
    """
    Spawn one stream per actor from a single seed.

    Each actor draws from its own stream, so an eavesdropper that never acts
    leaves the draws of Alice, Bob and the channel untouched.
    """
    sequence = np.random.SeedSequence([int(seed), int(salt), int(attempt)])
    children = sequence.spawn(len(STREAM_NAMES))
    generators = {
        name: np.random.default_rng(child)
        for name, child in zip(STREAM_NAMES, children)
    }
    return SessionStreams(**generators)


def as_streams(rng: "SessionStreams | SeededRng") -> SessionStreams:
    """Accept either ready-made session streams or a single generator to split."""
    if isinstance(rng, SessionStreams):
        return rng
    children = rng.spawn(len(STREAM_NAMES))
    return SessionStreams(**dict(zip(STREAM_NAMES, children)))
