"""Core domain types, registry and credit ledger."""

import pytest
from hypothesis import given, strategies as st

from hems.model import (
    DeviceMetadata,
    UsageEvent,
    eur_to_mc,
    format_eur,
    mc_to_eur,
)
from hems.registry import (
    CreditLedger,
    DeviceRegistry,
    DuplicateDeviceError,
    DuplicateEventError,
    UnknownDeviceError,
    UnpricedEventError,
    Vocabulary,
    VocabularyError,
)

DEVICES = Vocabulary(["fridge", "washing machine", "television", "kettle"], "device type")
ROOMS = Vocabulary(["kitchen", "living room"], "room")


def fridge(credit_eur=0.0, device_id="fridge1"):
    return DeviceMetadata(
        device_id=device_id, device_type="fridge", room="kitchen",
        user_driven=False, credit_mc=eur_to_mc(credit_eur))


@pytest.fixture()
def registry():
    return DeviceRegistry(DEVICES, ROOMS)


class TestMoney:
    def test_quantization_round_trip(self):
        assert eur_to_mc(0.50) == 50_000
        assert mc_to_eur(50_000) == 0.50
        assert format_eur(950_000) == "9.50"

    @given(st.integers(min_value=0, max_value=10**9))
    def test_mc_eur_mc_exact(self, mc):
        assert eur_to_mc(mc_to_eur(mc)) == mc


class TestVocabulary:
    def test_file_format(self, tmp_path):
        path = tmp_path / "terms.txt"
        path.write_text("# comment\nfridge\n  washing machine  \n\n# more\nkettle\n")
        vocab = Vocabulary.from_file(path)
        assert "fridge" in vocab
        assert "washing machine" in vocab
        assert "Washing  Machine" in vocab  # normalization
        assert "warpdrive" not in vocab

    def test_require_rejects_unknown(self):
        with pytest.raises(VocabularyError):
            DEVICES.require("warpdrive")


class TestRegistry:
    def test_round_trip(self, registry):
        device_id = registry.register(fridge())
        listed = registry.list()
        assert [m.device_id for m in listed] == [device_id]
        assert listed[0].user_driven is False
        assert registry.get(device_id).device_type == "fridge"

    def test_duplicate_id_rejected(self, registry):
        registry.register(fridge())
        with pytest.raises(DuplicateDeviceError):
            registry.register(fridge())

    def test_vocabulary_gate(self, registry):
        bad = DeviceMetadata(device_id="x", device_type="warpdrive", room="kitchen")
        with pytest.raises(VocabularyError):
            registry.register(bad)
        bad_room = DeviceMetadata(device_id="x", device_type="fridge", room="bridge")
        with pytest.raises(VocabularyError):
            registry.register(bad_room)
        assert "x" not in registry

    def test_unknown_device(self, registry):
        with pytest.raises(UnknownDeviceError):
            registry.get("nope")

    def test_update_revalidates(self, registry):
        registry.register(fridge())
        with pytest.raises(VocabularyError):
            registry.update("fridge1", device_type="warpdrive")


def priced_event(cost_eur, t_start=1000.0, device_id="fridge1"):
    return UsageEvent(device_id, t_start, 600.0, 0.1, cost_mc=eur_to_mc(cost_eur))


class TestCreditLedger:
    def test_simple_debit(self, registry):
        registry.register(fridge(credit_eur=10.00))
        ledger = CreditLedger(registry)
        new_credit = ledger.apply_event("fridge1", priced_event(0.50))
        assert new_credit == eur_to_mc(9.50)
        assert registry.get("fridge1").credit_mc == eur_to_mc(9.50)

    def test_floor_at_zero(self, registry):
        registry.register(fridge(credit_eur=0.30))
        ledger = CreditLedger(registry)
        assert ledger.apply_event("fridge1", priced_event(0.50)) == 0
        # events keep being recorded at zero credit (informational, not enforcement)
        assert ledger.apply_event("fridge1", priced_event(0.20, t_start=2000.0)) == 0
        assert ledger.total_debited_mc() == eur_to_mc(0.70)

    def test_replay_rejected_credit_unchanged(self, registry):
        registry.register(fridge(credit_eur=10.00))
        ledger = CreditLedger(registry)
        event = priced_event(0.50)
        ledger.apply_event("fridge1", event)
        with pytest.raises(DuplicateEventError):
            ledger.apply_event("fridge1", event)
        assert registry.get("fridge1").credit_mc == eur_to_mc(9.50)

    def test_unpriced_event_rejected(self, registry):
        registry.register(fridge())
        ledger = CreditLedger(registry)
        with pytest.raises(UnpricedEventError):
            ledger.apply_event("fridge1", UsageEvent("fridge1", 0.0, 60.0, 0.1))

    def test_unknown_device_rejected(self, registry):
        ledger = CreditLedger(registry)
        with pytest.raises(UnknownDeviceError):
            ledger.apply_event("ghost", priced_event(0.10))

    @given(costs=st.lists(st.integers(min_value=0, max_value=500_000), max_size=50))
    def test_credit_monotone_and_never_negative(self, costs):
        registry = DeviceRegistry(DEVICES, ROOMS)
        registry.register(fridge(credit_eur=5.00))
        ledger = CreditLedger(registry)
        previous = registry.get("fridge1").credit_mc
        for i, cost in enumerate(costs):
            credit = ledger.apply_event(
                "fridge1", UsageEvent("fridge1", float(i), 60.0, 0.1, cost_mc=cost))
            assert 0 <= credit <= previous
            previous = credit

    def test_conservation_exact_over_many_events(self, registry):
        # ledger debits reconcile with applied costs exactly (integer money)
        registry.register(fridge(credit_eur=100.00))
        ledger = CreditLedger(registry)
        total = 0
        for i in range(10_000):
            cost_mc = (i * 37) % 991  # pseudo-random small costs
            ledger.apply_event(
                "fridge1", UsageEvent("fridge1", float(i), 60.0, 0.1, cost_mc=cost_mc))
            total += cost_mc
        assert ledger.total_debited_mc() == total


class TestUsageEvent:
    def test_validation(self):
        with pytest.raises(ValueError):
            UsageEvent("d", 0.0, 0.0, 1.0)
        with pytest.raises(ValueError):
            UsageEvent("d", 0.0, 60.0, 0.0)

    def test_identity_is_stable(self):
        a = UsageEvent("d", 100.0, 60.0, 1.0)
        b = UsageEvent("d", 100.0, 60.0, 2.0)  # same run, re-integrated energy
        assert a.identity() == b.identity()
