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

import logging
from typing import Any
from typing import Literal

from pydantic import BaseModel
from pydantic import ConfigDict
from pydantic import Field
from pydantic import model_validator

from qkdsim.eavesdrop.strategies import EntangledEve
from qkdsim.eavesdrop.strategies import EveStrategy
from qkdsim.eavesdrop.strategies import NoEve
from qkdsim.eavesdrop.strategies import OpaqueEve
from qkdsim.eavesdrop.strategies import TranslucentEve
from qkdsim.eavesdrop.strategies import entangled_coefficients

logger = logging.getLogger(__name__)

EveKind = Literal["none", "opaque", "translucent", "entangled"]

# Strategies that act on single carriers only.
CARRIER_ONLY_KINDS = frozenset(["translucent", "entangled"])

# Protocols whose intercept-resend analysis gives the k = 2Rn bound.
OPAQUE_BOUND_PROTOCOLS = frozenset(["bb84", "bb84-noisy"])


def parse_eve_spec(text: str) -> dict[str, Any]:
    """
    "none", "opaque[:lam]", "translucent[:strength]", "entangled[:overlap]"
    or "entangled:a,b".
    """
    kind, _, argument = text.strip().partition(":")
    kind = kind.strip().lower()
    argument = argument.strip()
    if kind == "none":
        if argument:
            raise ValueError(f"Eve spec 'none' takes no argument: {text!r}")
        return {"kind": "none"}
    if kind == "opaque":
        return {"kind": kind, "lam": float(argument)} if argument else {"kind": kind}
    if kind == "translucent":
        if not argument:
            return {"kind": kind}
        return {"kind": kind, "strength": float(argument)}
    if kind == "entangled":
        if not argument:
            return {"kind": kind}
        values = [float(part) for part in argument.split(",")]
        if len(values) == 1:
            return {"kind": kind, "probe_overlap": values[0]}
        if len(values) in (2, 3):
            return dict(zip(("kind", "a", "b", "probe_overlap"), [kind, *values]))
    raise ValueError(f"Invalid Eve spec: {text!r}")


class EveSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: EveKind = Field(default="none", description="Eavesdropping strategy")
    lam: float = Field(default=1.0, ge=0.0, le=1.0, description="Opaque intensity")
    strength: float = Field(
        default=0.5, ge=0.0, le=1.0, description="Translucent probe strength"
    )
    a: float | None = Field(default=None, description="Entangled coefficient a")
    b: float | None = Field(default=None, description="Entangled coefficient b")
    probe_overlap: float | None = Field(
        default=None, ge=-1.0, le=1.0, description="Entangled probe overlap"
    )

    @model_validator(mode="before")
    @classmethod
    def _from_text(cls, data: Any) -> Any:
        if isinstance(data, str):
            return parse_eve_spec(data)
        return data

    @model_validator(mode="after")
    def _check_coefficients(self) -> "EveSpec":
        if (self.a is None) != (self.b is None):
            raise ValueError("entangled Eve needs both a and b, or neither")
        return self

    @property
    def label(self) -> str:
        if self.kind == "opaque":
            return f"opaque:{self.lam:g}"
        if self.kind == "translucent":
            return f"translucent:{self.strength:g}"
        if self.kind == "entangled":
            if self.a is not None:
                return f"entangled:{self.a:g},{self.b:g}"
            return f"entangled:{self.probe_overlap or 0.0:g}"
        return "none"

    @property
    def opaque_intensity(self) -> float:
        return self.lam if self.kind == "opaque" else 0.0

    @property
    def opaque_model(self) -> bool:
        """Whether the opaque-model knowledge bound describes this strategy."""
        return self.kind in ("none", "opaque")

    def knowledge_bound_applies(self, protocol: str) -> bool:
        if self.kind == "none":
            return True
        return self.opaque_model and protocol in OPAQUE_BOUND_PROTOCOLS

    def with_value(self, name: str, value: float) -> "EveSpec":
        return self.model_copy(update={name: value})

    def build(self, theta: float) -> EveStrategy:
        """A fresh strategy (with an empty ledger) for one session."""
        if self.kind == "opaque":
            return OpaqueEve(self.lam)
        if self.kind == "translucent":
            return TranslucentEve(theta, self.strength)
        if self.kind == "entangled":
            if self.a is not None:
                return EntangledEve(theta, self.a, self.b, self.probe_overlap)
            overlap = self.probe_overlap if self.probe_overlap is not None else 0.0
            a, b = entangled_coefficients(theta, overlap)
            return EntangledEve(theta, a, b, overlap)
        return NoEve()
