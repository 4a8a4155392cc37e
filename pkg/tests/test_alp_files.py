"""File registry behavior: bounds, permissions, hooks, reset."""

import pytest
from hypothesis import given
import hypothesis.strategies as st

from geowsn.alp import (
    ActionHook,
    FileAccess,
    FileHeader,
    FileStore,
    HookTrigger,
    NoSuchFileError,
    OutOfBoundsError,
    PermissionDeniedError,
)

CONFIG_FILE = 0x41
DATA_FILE = 0x40


def store_with_config(content: bytes | None = None) -> FileStore:
    store = FileStore()
    store.create(FileHeader(CONFIG_FILE, 12, persistent=True), content)
    return store


def test_fresh_file_reads_zero():
    store = store_with_config()
    assert store.read(CONFIG_FILE, 3, 1) == b"\x00"
    assert store.read(CONFIG_FILE, 0, 12) == bytes(12)


def test_read_past_end_is_out_of_bounds():
    store = store_with_config()
    with pytest.raises(OutOfBoundsError):
        store.read(CONFIG_FILE, 0, 13)


def test_write_straddling_end_is_out_of_bounds():
    store = store_with_config()
    with pytest.raises(OutOfBoundsError):
        store.write(CONFIG_FILE, 11, b"\x01\x02")
    # a failed write leaves the file untouched
    assert store.raw(CONFIG_FILE) == bytes(12)


def test_single_byte_write_leaves_rest_unchanged():
    base = bytes(range(12))
    store = store_with_config(base)
    store.write(CONFIG_FILE, 3, b"\xAA")
    after = store.raw(CONFIG_FILE)
    assert after[3] == 0xAA
    assert after[:3] == base[:3]
    assert after[4:] == base[4:]


def test_full_file_write_replaces_everything():
    store = store_with_config(bytes(range(12)))
    image = bytes(reversed(range(12)))
    store.write(CONFIG_FILE, 0, image)
    assert store.raw(CONFIG_FILE) == image


def test_unknown_file_raises():
    store = FileStore()
    with pytest.raises(NoSuchFileError):
        store.read(0x7E, 0, 1)
    with pytest.raises(NoSuchFileError):
        store.write(0x7E, 0, b"\x00")


def test_duplicate_create_rejected():
    store = store_with_config()
    with pytest.raises(ValueError):
        store.create(FileHeader(CONFIG_FILE, 12))


def test_permission_bits_enforced():
    store = FileStore()
    store.create(FileHeader(0x10, 4, readable=False))
    store.create(FileHeader(0x11, 4, writable=False))
    with pytest.raises(PermissionDeniedError):
        store.read(0x10, 0, 1)
    with pytest.raises(PermissionDeniedError):
        store.write(0x11, 0, b"\x00")
    # the opposite operation still works
    store.write(0x10, 0, b"\x01")
    assert store.read(0x11, 0, 4) == bytes(4)


def test_write_hook_fires_once_per_write():
    store = store_with_config()
    fired: list[FileAccess] = []
    store.register_hook(
        ActionHook(CONFIG_FILE, HookTrigger.ON_WRITE, fired.append))
    store.write(CONFIG_FILE, 3, b"\xAA")
    assert len(fired) == 1
    access = fired[0]
    assert access.file_id == CONFIG_FILE
    assert access.trigger is HookTrigger.ON_WRITE
    assert access.offset == 3
    assert access.data == b"\xAA"


def test_write_hook_does_not_fire_on_read():
    store = store_with_config()
    fired = []
    store.register_hook(
        ActionHook(CONFIG_FILE, HookTrigger.ON_WRITE, fired.append))
    store.read(CONFIG_FILE, 0, 12)
    assert fired == []


def test_hook_sees_state_after_the_access():
    """Hooks run once the write has landed, so a callback reading the
    file back observes the new content."""
    store = store_with_config()
    seen = []
    store.register_hook(ActionHook(
        CONFIG_FILE, HookTrigger.ON_WRITE,
        lambda access: seen.append(store.raw(CONFIG_FILE)[3])))
    store.write(CONFIG_FILE, 3, b"\xAA")
    assert seen == [0xAA]


def test_hooks_fire_in_registration_order():
    store = store_with_config()
    order = []
    store.register_hook(ActionHook(
        CONFIG_FILE, HookTrigger.ON_WRITE, lambda a: order.append("first")))
    store.register_hook(ActionHook(
        CONFIG_FILE, HookTrigger.ON_WRITE, lambda a: order.append("second")))
    store.write(CONFIG_FILE, 0, b"\x01")
    assert order == ["first", "second"]


def test_hook_for_other_file_stays_quiet():
    store = store_with_config()
    store.create(FileHeader(DATA_FILE, 32))
    fired = []
    store.register_hook(
        ActionHook(DATA_FILE, HookTrigger.ON_WRITE, fired.append))
    store.write(CONFIG_FILE, 0, b"\x01")
    assert fired == []


def test_hook_needs_existing_file():
    store = FileStore()
    with pytest.raises(NoSuchFileError):
        store.register_hook(
            ActionHook(0x50, HookTrigger.ON_WRITE, lambda a: None))


def test_read_hook_fires_on_read():
    store = store_with_config()
    fired = []
    store.register_hook(
        ActionHook(CONFIG_FILE, HookTrigger.ON_READ, fired.append))
    store.read(CONFIG_FILE, 2, 4)
    assert len(fired) == 1
    assert fired[0].offset == 2
    assert fired[0].data == bytes(4)


def test_reset_zeroes_volatile_keeps_persistent():
    store = FileStore()
    store.create(FileHeader(DATA_FILE, 8, persistent=False))
    store.create(FileHeader(CONFIG_FILE, 12, persistent=True))
    store.write(DATA_FILE, 0, b"\x11" * 8)
    store.write(CONFIG_FILE, 0, b"\x22" * 12)
    store.reset()
    assert store.raw(DATA_FILE) == bytes(8)
    assert store.raw(CONFIG_FILE) == b"\x22" * 12


def test_file_header_validation():
    with pytest.raises(ValueError):
        FileHeader(0x100, 4)
    with pytest.raises(ValueError):
        FileHeader(0x10, 0)


@given(
    base=st.binary(min_size=12, max_size=12),
    offset=st.integers(0, 11),
    payload=st.binary(min_size=1, max_size=12),
)
def test_write_locality(base, offset, payload):
    """A write changes exactly the addressed range, nothing else."""
    store = store_with_config(base)
    if offset + len(payload) > 12:
        with pytest.raises(OutOfBoundsError):
            store.write(CONFIG_FILE, offset, payload)
        assert store.raw(CONFIG_FILE) == base
        return
    store.write(CONFIG_FILE, offset, payload)
    after = store.raw(CONFIG_FILE)
    assert after[offset:offset + len(payload)] == payload
    assert after[:offset] == base[:offset]
    assert after[offset + len(payload):] == base[offset + len(payload):]
