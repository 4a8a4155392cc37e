"""File registry, action hooks and wire codec for the file-operation protocol.

Everything a node exposes is a small fixed-length file.  Remote peers
interact with a node exclusively through offset-addressed reads and
writes on those files, and the node answers with returned file data or
a status byte.  The same byte format travels in both directions, so a
single codec serves node firmware, gateway forwarding and the backend.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Callable

SENSOR_DATA_FILE = 0x40
NODE_CONFIG_FILE = 0x41

#: opcode (u8), file id (u8), offset (u32 LE), length (u32 LE)
_ACTION_HEADER = struct.Struct("<BBII")

_U32_MAX = 0xFFFFFFFF


class Opcode(IntEnum):
    """Action opcodes that may appear in a command."""

    READ_FILE_DATA = 0x01
    WRITE_FILE_DATA = 0x04
    RETURN_FILE_DATA = 0x20
    STATUS = 0x7F


# Status payload bytes emitted by nodes.  0x00 acknowledges a write;
# the rest report why a request or a local operation failed.
STATUS_OK = 0x00
STATUS_UNKNOWN_SENSOR_TYPE = 0x01
STATUS_RESERVED_ACTION_CODE = 0x02
STATUS_DRIVER_FAULT = 0x03
STATUS_FILE_ACCESS_ERROR = 0x04
STATUS_MALFORMED_COMMAND = 0x05


class AlpError(Exception):
    """Base class for protocol and file-registry errors."""


class DecodeError(AlpError):
    """Raised when a byte string cannot be decoded into a command.

    ``offset`` is the position in the input at which decoding failed.
    """

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class TruncatedInputError(DecodeError):
    pass


class UnknownOpcodeError(DecodeError):
    def __init__(self, opcode: int, offset: int):
        super().__init__(f"unknown opcode 0x{opcode:02X}", offset)
        self.opcode = opcode


class FileAccessError(AlpError):
    """Base class for file-registry access failures."""


class NoSuchFileError(FileAccessError):
    def __init__(self, file_id: int):
        super().__init__(f"no file 0x{file_id:02X}")
        self.file_id = file_id


class PermissionDeniedError(FileAccessError):
    def __init__(self, file_id: int, operation: str):
        super().__init__(f"file 0x{file_id:02X} is not {operation}")
        self.file_id = file_id


class OutOfBoundsError(FileAccessError):
    def __init__(self, file_id: int, offset: int, length: int, size: int):
        super().__init__(
            f"range [{offset}, {offset + length}) exceeds file 0x{file_id:02X}"
            f" of {size} bytes"
        )
        self.file_id = file_id


@dataclass(frozen=True)
class AlpAction:
    """One operation of a command.

    ``offset`` and ``length`` address a byte range inside the target
    file.  Whether ``payload`` is present depends on the opcode:
    reads carry none, writes and returned data carry exactly
    ``length`` bytes, and a status carries a single status byte while
    ``file_id``/``offset``/``length`` echo the request it refers to.
    """

    opcode: Opcode
    file_id: int
    offset: int = 0
    length: int = 0
    payload: bytes = b""

    def __post_init__(self) -> None:
        if not 0 <= self.file_id <= 0xFF:
            raise ValueError(f"file_id {self.file_id} out of u8 range")
        if not 0 <= self.offset <= _U32_MAX:
            raise ValueError(f"offset {self.offset} out of u32 range")
        if not 0 <= self.length <= _U32_MAX:
            raise ValueError(f"length {self.length} out of u32 range")
        opcode = Opcode(self.opcode)
        if opcode is not self.opcode:
            object.__setattr__(self, "opcode", opcode)
        if opcode is Opcode.READ_FILE_DATA:
            if self.payload:
                raise ValueError("read actions carry no payload")
        elif opcode is Opcode.STATUS:
            if len(self.payload) != 1:
                raise ValueError("status actions carry exactly one byte")
        elif len(self.payload) != self.length:
            raise ValueError(
                f"payload of {len(self.payload)} bytes does not match"
                f" length {self.length}"
            )

    @classmethod
    def read(cls, file_id: int, offset: int, length: int) -> "AlpAction":
        return cls(Opcode.READ_FILE_DATA, file_id, offset, length)

    @classmethod
    def write(cls, file_id: int, offset: int, payload: bytes) -> "AlpAction":
        return cls(Opcode.WRITE_FILE_DATA, file_id, offset, len(payload), bytes(payload))

    @classmethod
    def return_data(cls, file_id: int, offset: int, payload: bytes) -> "AlpAction":
        return cls(Opcode.RETURN_FILE_DATA, file_id, offset, len(payload), bytes(payload))

    @classmethod
    def status(cls, code: int, file_id: int = 0, offset: int = 0,
               length: int = 0) -> "AlpAction":
        """Build a status action echoing the request it answers."""
        return cls(Opcode.STATUS, file_id, offset, length, bytes([code]))


@dataclass(frozen=True)
class AlpCommand:
    """A non-empty sequence of actions executed in order."""

    actions: tuple[AlpAction, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "actions", tuple(self.actions))
        if not self.actions:
            raise ValueError("a command holds at least one action")

    def __iter__(self):
        return iter(self.actions)

    def __len__(self) -> int:
        return len(self.actions)


def encode_action(action: AlpAction) -> bytes:
    header = _ACTION_HEADER.pack(
        action.opcode, action.file_id, action.offset, action.length
    )
    return header + action.payload


def encode_command(command: AlpCommand) -> bytes:
    return b"".join(encode_action(action) for action in command.actions)


def _decode_action(data: bytes, pos: int) -> tuple[AlpAction, int]:
    if len(data) - pos < _ACTION_HEADER.size:
        raise TruncatedInputError("action header incomplete", pos)
    opcode_byte, file_id, offset, length = _ACTION_HEADER.unpack_from(data, pos)
    try:
        opcode = Opcode(opcode_byte)
    except ValueError:
        raise UnknownOpcodeError(opcode_byte, pos) from None
    pos += _ACTION_HEADER.size
    if opcode is Opcode.READ_FILE_DATA:
        want = 0
    elif opcode is Opcode.STATUS:
        want = 1
    else:
        want = length
    if len(data) - pos < want:
        raise TruncatedInputError(
            f"payload of {want} bytes incomplete", pos
        )
    payload = bytes(data[pos:pos + want])
    pos += want
    return AlpAction(opcode, file_id, offset, length, payload), pos


def decode_command(data: bytes) -> AlpCommand:
    """Decode a byte string into a command, consuming all input.

    Raises :class:`TruncatedInputError` or :class:`UnknownOpcodeError`
    with the byte offset of the failure.
    """
    if not data:
        raise TruncatedInputError("empty input", 0)
    actions = []
    pos = 0
    while pos < len(data):
        action, pos = _decode_action(data, pos)
        actions.append(action)
    return AlpCommand(tuple(actions))


class HookTrigger(Enum):
    ON_READ = "read"
    ON_WRITE = "write"


@dataclass(frozen=True)
class FileHeader:
    """Fixed metadata of one file in the registry.

    ``persistent`` files keep content across a device reset; volatile
    files are zeroed by it.
    """

    file_id: int
    length: int
    readable: bool = True
    writable: bool = True
    persistent: bool = False

    def __post_init__(self) -> None:
        if not 0 <= self.file_id <= 0xFF:
            raise ValueError(f"file_id {self.file_id} out of u8 range")
        if self.length <= 0:
            raise ValueError("file length must be positive")


@dataclass(frozen=True)
class FileAccess:
    """What a hook callback learns about the access that fired it."""

    file_id: int
    trigger: HookTrigger
    offset: int
    data: bytes


@dataclass(frozen=True)
class ActionHook:
    """A callback bound to accesses of one file.

    Hooks fire after the access has completed, once per matching
    access, in registration order.
    """

    file_id: int
    trigger: HookTrigger
    callback: Callable[[FileAccess], None]
    name: str = ""


class FileStore:
    """A node's file registry: fixed-size files plus action hooks."""

    def __init__(self) -> None:
        self._headers: dict[int, FileHeader] = {}
        self._content: dict[int, bytearray] = {}
        self._hooks: list[ActionHook] = []

    def create(self, header: FileHeader, content: bytes | None = None) -> None:
        if header.file_id in self._headers:
            raise ValueError(f"file 0x{header.file_id:02X} already exists")
        if content is None:
            content = bytes(header.length)
        if len(content) != header.length:
            raise ValueError("initial content must fill the file exactly")
        self._headers[header.file_id] = header
        self._content[header.file_id] = bytearray(content)

    def file_ids(self) -> tuple[int, ...]:
        return tuple(sorted(self._headers))

    def header(self, file_id: int) -> FileHeader:
        try:
            return self._headers[file_id]
        except KeyError:
            raise NoSuchFileError(file_id) from None

    def raw(self, file_id: int) -> bytes:
        """Owner's view of a file: full content, no checks, no hooks."""
        self.header(file_id)
        return bytes(self._content[file_id])

    def _check_range(self, header: FileHeader, offset: int, length: int) -> None:
        if offset < 0 or length < 0 or offset + length > header.length:
            raise OutOfBoundsError(header.file_id, offset, length, header.length)

    def read(self, file_id: int, offset: int, length: int) -> bytes:
        header = self.header(file_id)
        if not header.readable:
            raise PermissionDeniedError(file_id, "readable")
        self._check_range(header, offset, length)
        data = bytes(self._content[file_id][offset:offset + length])
        self._fire(FileAccess(file_id, HookTrigger.ON_READ, offset, data))
        return data

    def write(self, file_id: int, offset: int, payload: bytes) -> None:
        header = self.header(file_id)
        if not header.writable:
            raise PermissionDeniedError(file_id, "writable")
        self._check_range(header, offset, len(payload))
        self._content[file_id][offset:offset + len(payload)] = payload
        self._fire(FileAccess(file_id, HookTrigger.ON_WRITE, offset, bytes(payload)))

    def register_hook(self, hook: ActionHook) -> None:
        self.header(hook.file_id)
        self._hooks.append(hook)

    def _fire(self, access: FileAccess) -> None:
        for hook in list(self._hooks):
            if hook.file_id == access.file_id and hook.trigger is access.trigger:
                hook.callback(access)

    def reset(self) -> None:
        """Zero every volatile file, as a device reset would."""
        for file_id, header in self._headers.items():
            if not header.persistent:
                self._content[file_id] = bytearray(header.length)
