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

from qkdsim.protocols.records import KeyStage
from qkdsim.transport.transcript import PublicRecord

logger = logging.getLogger(__name__)


class SessionHook:
    """Passive observer of a session; hooks never change protocol state."""

    def after_publish(self, record: PublicRecord) -> None:
        pass

    def after_stage(self, stage: KeyStage, alice_len: int, bob_len: int) -> None:
        pass


class LoggingHook(SessionHook):
    """Hook that logs public-channel records and/or key stage transitions."""

    def __init__(
        self,
        *,
        transcript_logger: str | None = None,
        stage_logger: str | None = None,
        payload_preview_chars: int = 120,
    ) -> None:
        self.transcript_logger = (
            logging.getLogger(transcript_logger) if transcript_logger else None
        )
        self.stage_logger = logging.getLogger(stage_logger) if stage_logger else None
        self.payload_preview_chars = payload_preview_chars

    def after_publish(self, record: PublicRecord) -> None:
        log = self.transcript_logger
        if not log:
            return
        payload = record.payload.decode("utf-8")
        if len(payload) > self.payload_preview_chars:
            log.debug(
                "📡 #%s %s %s (truncated): %s...",
                record.index,
                record.sender.value,
                record.phase,
                payload[: self.payload_preview_chars],
            )
        else:
            log.debug(
                "📡 #%s %s %s: %s",
                record.index,
                record.sender.value,
                record.phase,
                payload,
            )

    def after_stage(self, stage: KeyStage, alice_len: int, bob_len: int) -> None:
        log = self.stage_logger
        if not log:
            return
        log.info("🔑 ===== KEY STAGE %s =====", stage.label.upper())
        log.info("Alice: %s bits, Bob: %s bits", alice_len, bob_len)


def notify_stage(
    hooks: list[SessionHook], stage: KeyStage, alice_len: int, bob_len: int
) -> None:
    for hook in hooks:
        hook.after_stage(stage, alice_len, bob_len)
