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

import math
import re

# Accepts "0.39", "pi", "pi/8", "3*pi/16", "3pi/16", "-pi/4"
ANGLE_PATTERN = re.compile(
    r"^\s*(?P<sign>-)?\s*"
    r"(?:(?P<num>\d+(?:\.\d+)?)\s*\*?\s*)?"
    r"pi\s*(?:/\s*(?P<den>\d+(?:\.\d+)?))?\s*$",
    re.IGNORECASE,
)


def parse_angle(value: str | float | int) -> float:
    if isinstance(value, (int, float)):
        return float(value)
    text = str(value).strip()
    match = ANGLE_PATTERN.match(text)
    if match:
        numerator = float(match.group("num")) if match.group("num") else 1.0
        denominator = float(match.group("den")) if match.group("den") else 1.0
        angle = numerator * math.pi / denominator
        return -angle if match.group("sign") else angle
    try:
        return float(text)
    except ValueError:
        raise ValueError(f"Invalid angle: {value!r}") from None
