
import pytest

from hearth.home import (
    BuiltinHome,
    DeviceState,
    SettingType,
    StateError,
    TemplateError,
    coerce_value,
    device_catalog,
    device_tag,
    format_time_of_day,
    load_home,
    load_lexicon,
    parse_template,
    parse_time_of_day,
    template_from_docs,
    validate_state_doc,
)


class TestTimeOfDay:
    @pytest.mark.parametrize(
        "text,minutes",
        [
            ("9:00PM", 21 * 60),
            ("9:00pm", 21 * 60),
            ("12:00am", 0),
            ("12:30PM", 12 * 60 + 30),
            ("07:05", 7 * 60 + 5),
            ("23:59", 23 * 60 + 59),
            ("7:00:45AM", 7 * 60),
            (" 8:15 am ", 8 * 60 + 15),
        ],
    )
    def test_parse(self, text, minutes):
        assert parse_time_of_day(text) == minutes

    @pytest.mark.parametrize("text", ["25:00", "9:60PM", "noon", "13:00PM", ""])
    def test_parse_rejects(self, text):
        with pytest.raises(ValueError):
            parse_time_of_day(text)

    def test_format_round_trip(self):
        for minutes in (0, 59, 720, 1439):
            assert parse_time_of_day(format_time_of_day(minutes)) == minutes


class TestCoercion:
    def test_bool_is_not_numeric(self):
        with pytest.raises(ValueError):
            coerce_value(SettingType.FLOAT, True)
        with pytest.raises(ValueError):
            coerce_value(SettingType.BOOL, 1)

    def test_int_accepts_integral_float(self):
        assert coerce_value(SettingType.INT, 72.0) == 72
        with pytest.raises(ValueError):
            coerce_value(SettingType.INT, 71.5)

    def test_time_from_string_and_minutes(self):
        assert coerce_value(SettingType.TIME, "9:00PM") == 21 * 60
        assert coerce_value(SettingType.TIME, 90) == 90
        with pytest.raises(ValueError):
            coerce_value(SettingType.TIME, 1440)

    def test_color_exact_keys(self):
        assert coerce_value(SettingType.COLOR, {"r": 1, "g": 2, "b": 3}) == {
            "r": 1,
            "g": 2,
            "b": 3,
        }
        with pytest.raises(ValueError):
            coerce_value(SettingType.COLOR, {"r": 1, "g": 2})
        with pytest.raises(ValueError):
            coerce_value(SettingType.COLOR, {"r": 1, "g": 2, "b": 300})


class TestTemplates:
    def test_builtin_homes_nest(self):
        sizes = {}
        for home in BuiltinHome:
            template = load_home(home.value)
            sizes[home.value] = sum(1 for _ in template.iter_devices())
        assert sizes["h1"] < sizes["h2"] < sizes["h3"]

    def test_sensor_suite_identical_across_homes(self):
        docs = {h.value: load_home(h.value).sensors_doc() for h in BuiltinHome}
        assert docs["h1"] == docs["h2"] == docs["h3"]

    def test_serialize_round_trip(self, h2):
        devices_text, sensors_text = h2.serialize()
        clone = parse_template(devices_text, sensors_text)
        assert clone == h2
        assert clone.digest() == h2.digest()

    def test_digest_tracks_content(self, h1):
        devices = h1.devices_doc()
        devices["livingroom"]["overhead_light"]["brightness"] = "int"
        other = template_from_docs(devices, h1.sensors_doc())
        assert other.digest() != h1.digest()

    def test_global_room_reserved(self, h1):
        devices = h1.devices_doc()
        devices["global"] = {"thing": {"state": "bool"}}
        with pytest.raises(TemplateError):
            template_from_docs(devices, h1.sensors_doc())

    def test_sensor_scope_must_exist(self, h1):
        sensors = h1.sensors_doc()
        sensors["attic"] = {"motion": "time"}
        with pytest.raises(TemplateError):
            template_from_docs(h1.devices_doc(), sensors)

    def test_duplicate_json_keys_rejected(self):
        raw = '{"a": {"x": {"state": "bool"}, "x": {"state": "bool"}}}'
        with pytest.raises(TemplateError):
            parse_template(raw, "{}")


class TestLexicon:
    def test_tags_cover_builtin_rosters(self):
        lexicon = load_lexicon()
        for home in BuiltinHome:
            template = load_home(home.value)
            entries = device_catalog(template, lexicon)
            assert len(entries) == sum(1 for _ in template.iter_devices())

    def test_first_match_wins(self):
        lexicon = load_lexicon()
        assert device_tag("floor_lamp", lexicon) == "light"
        assert device_tag("humidifier_plug", lexicon) == "appliance"
        assert device_tag("mystery_box", lexicon) is None

    def test_strict_catalog_raises_on_unmapped(self, h1):
        with pytest.raises(TemplateError):
            device_catalog(h1, [("nothing_matches", "x")], strict=True)


class TestDeviceState:
    def test_defaults_and_set(self, h1):
        state = DeviceState.initial(h1)
        assert state.get("livingroom", "overhead_light", "state") is False
        state.set("livingroom", "overhead_light", "brightness", 0.75)
        assert state.get("livingroom", "overhead_light", "brightness") == 0.75

    def test_set_coerces_and_rejects(self, h1):
        state = DeviceState.initial(h1)
        with pytest.raises(StateError):
            state.set("livingroom", "overhead_light", "state", "on")
        with pytest.raises(StateError):
            state.set("livingroom", "no_such_device", "state", True)

    def test_doc_round_trip(self, h3):
        state = DeviceState.initial(h3)
        state.set("entry", "smart_lock", "locked", True)
        doc = state.to_doc()
        assert DeviceState.from_doc(h3, doc) == state

    def test_validate_state_doc_flags_problems(self, h1):
        doc = DeviceState.initial(h1).to_doc()
        del doc["entry"]["overhead_light"]
        doc["livingroom"]["overhead_light"]["state"] = "yes"
        kinds = {v.kind for v in validate_state_doc(h1, doc)}
        assert kinds == {"missing", "type"}

    def test_from_doc_requires_total_doc(self, h1):
        doc = DeviceState.initial(h1).to_doc()
        del doc["bedroom"]
        with pytest.raises(StateError):
            DeviceState.from_doc(h1, doc)
