"""REMB store round-trips, corrupt-file diagnostics, and data-file loaders."""

import json
import struct

import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import radialign as ra
from radialign.store import write_metadata, read_metadata

HEADER = struct.Struct("<4sHIQB")


def pack_header(magic=b"REMB", version=1, dim=3, count=0, tag=8):
    return HEADER.pack(magic, version, dim, count, tag)


def pack_record(key: str, values, tag=8):
    encoded = key.encode("utf-8")
    dtype = np.dtype("<f4") if tag == 4 else np.dtype("<f8")
    return (
        struct.pack("<H", len(encoded))
        + encoded
        + np.asarray(values, dtype=dtype).tobytes()
    )


class TestRoundTrip:
    def test_float64_bitwise(self, tmp_path, rng):
        table = {
            "": rng.standard_normal(6),
            "a": rng.standard_normal(6),
            "café/δ": rng.standard_normal(6),
            "\U0001f41f": rng.standard_normal(6),
        }
        path = tmp_path / "t.remb"
        ra.write_store(path, table, dtype=np.float64)
        store = ra.read_store(path)
        assert list(store.keys()) == list(table.keys())
        assert store.dtype == np.float64
        assert store.dim == 6
        for key, values in table.items():
            assert store[key].dtype == np.float64
            npt.assert_array_equal(store[key], values)

    def test_float32_quantization_exact(self, tmp_path, rng):
        table = {f"k{i}": rng.standard_normal(4) for i in range(20)}
        path = tmp_path / "t.remb"
        ra.write_store(path, table)
        store = ra.read_store(path)
        assert store.dtype == np.float32
        for key, values in table.items():
            expected = values.astype(np.float32).astype(np.float64)
            npt.assert_array_equal(store[key], expected)

    def test_store_object_round_trip_preserves_dtype(self, tmp_path, rng):
        store = ra.EmbeddingStore(dtype=np.float64)
        store.add("x", rng.standard_normal(3))
        store.add("y", rng.standard_normal(3))
        path = tmp_path / "t.remb"
        ra.write_store(path, store)
        back = ra.read_store(path)
        assert back.dtype == np.float64
        npt.assert_array_equal(back["x"], store["x"])

    def test_rewrite_is_byte_stable(self, tmp_path, rng):
        table = {f"k{i}": rng.standard_normal(5) for i in range(8)}
        p1, p2 = tmp_path / "a.remb", tmp_path / "b.remb"
        ra.write_store(p1, table, dtype=np.float64)
        ra.write_store(p2, ra.read_store(p1))
        assert p1.read_bytes() == p2.read_bytes()

    def test_special_values_survive(self, tmp_path):
        table = {"s": np.array([0.0, -0.0, 1e-300, 1e300, np.pi])}
        path = tmp_path / "t.remb"
        ra.write_store(path, table, dtype=np.float64)
        back = ra.read_store(path)["s"]
        assert back.tobytes() == table["s"].tobytes()

    @settings(max_examples=30, deadline=None)
    @given(
        keys=st.lists(st.text(min_size=0, max_size=12), min_size=1, max_size=8, unique=True),
        dim=st.integers(min_value=1, max_value=9),
        seed=st.integers(min_value=0, max_value=2**32 - 1),
    )
    def test_random_tables_round_trip(self, tmp_path_factory, keys, dim, seed):
        gen = np.random.default_rng(seed)
        table = {k: gen.standard_normal(dim) for k in keys}
        path = tmp_path_factory.mktemp("rt") / "t.remb"
        ra.write_store(path, table, dtype=np.float64)
        store = ra.read_store(path)
        assert list(store.keys()) == keys
        for k in keys:
            npt.assert_array_equal(store[k], table[k])


class TestWriteValidation:
    def test_empty_table_rejected(self, tmp_path):
        with pytest.raises(ra.DimensionMismatch):
            ra.write_store(tmp_path / "t.remb", {})

    def test_mixed_dims_rejected(self, tmp_path):
        with pytest.raises(ra.DimensionMismatch):
            ra.write_store(tmp_path / "t.remb", {"a": np.zeros(2), "b": np.zeros(3)})

    def test_unsupported_dtype_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            ra.write_store(tmp_path / "t.remb", {"a": np.zeros(2)}, dtype=np.float16)

    def test_oversized_key_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            ra.write_store(tmp_path / "t.remb", {"k" * 70000: np.zeros(2)})

    def test_failed_write_leaves_target_intact(self, tmp_path, rng):
        path = tmp_path / "t.remb"
        table = {"a": rng.standard_normal(3)}
        ra.write_store(path, table, dtype=np.float64)
        before = path.read_bytes()
        bad = {"a": table["a"], "k" * 70000: np.zeros(3)}
        with pytest.raises(ValueError):
            ra.write_store(path, bad, dtype=np.float64)
        assert path.read_bytes() == before


def write_bytes(tmp_path, payload: bytes):
    path = tmp_path / "bad.remb"
    path.write_bytes(payload)
    return path


class TestCorruptFiles:
    def test_truncated_header(self, tmp_path):
        path = write_bytes(tmp_path, b"REMB\x01\x00")
        with pytest.raises(ra.CorruptHeader) as exc:
            ra.read_store(path)
        assert exc.value.offset == 6

    def test_bad_magic(self, tmp_path):
        path = write_bytes(tmp_path, pack_header(magic=b"NOPE"))
        with pytest.raises(ra.CorruptHeader) as exc:
            ra.read_store(path)
        assert exc.value.offset == 0

    def test_bad_version(self, tmp_path):
        path = write_bytes(tmp_path, pack_header(version=2))
        with pytest.raises(ra.CorruptHeader) as exc:
            ra.read_store(path)
        assert exc.value.offset == 4

    def test_bad_dimension(self, tmp_path):
        path = write_bytes(tmp_path, pack_header(dim=0))
        with pytest.raises(ra.CorruptHeader) as exc:
            ra.read_store(path)
        assert exc.value.offset == 6

    def test_bad_dtype_tag(self, tmp_path):
        path = write_bytes(tmp_path, pack_header(tag=5))
        with pytest.raises(ra.CorruptHeader) as exc:
            ra.read_store(path)
        assert exc.value.offset == 18

    def test_missing_record(self, tmp_path):
        # count says one record but the file ends at the header
        path = write_bytes(tmp_path, pack_header(count=1))
        with pytest.raises(ra.TruncatedFile) as exc:
            ra.read_store(path)
        assert exc.value.offset == 19

    def test_truncated_key_length(self, tmp_path):
        path = write_bytes(tmp_path, pack_header(count=1) + b"\x02")
        with pytest.raises(ra.TruncatedFile) as exc:
            ra.read_store(path)
        assert exc.value.offset == 20

    def test_truncated_key(self, tmp_path):
        payload = pack_header(count=1) + struct.pack("<H", 5) + b"abc"
        path = write_bytes(tmp_path, payload)
        with pytest.raises(ra.TruncatedFile) as exc:
            ra.read_store(path)
        assert exc.value.offset == 21 + 3

    def test_truncated_payload(self, tmp_path):
        record = pack_record("ab", np.zeros(3))
        payload = pack_header(count=1) + record[: len(record) - 8]
        path = write_bytes(tmp_path, payload)
        with pytest.raises(ra.TruncatedFile) as exc:
            ra.read_store(path)
        # offset = header + keylen + key + the 16 payload bytes present
        assert exc.value.offset == 19 + 2 + 2 + 16

    def test_invalid_utf8_key(self, tmp_path):
        payload = (
            pack_header(count=1)
            + struct.pack("<H", 2)
            + b"\xff\xfe"
            + np.zeros(3).tobytes()
        )
        path = write_bytes(tmp_path, payload)
        with pytest.raises(ra.CorruptHeader) as exc:
            ra.read_store(path)
        assert exc.value.offset == 21

    def test_duplicate_key_offset(self, tmp_path):
        rec = pack_record("dup", np.zeros(2))
        payload = pack_header(dim=2, count=2) + rec + rec
        path = write_bytes(tmp_path, payload)
        with pytest.raises(ra.DuplicateKey) as exc:
            ra.read_store(path)
        assert exc.value.offset == 19 + len(rec)

    def test_trailing_data(self, tmp_path):
        rec = pack_record("a", np.zeros(2))
        payload = pack_header(dim=2, count=1) + rec + b"extra"
        path = write_bytes(tmp_path, payload)
        with pytest.raises(ra.CorruptHeader) as exc:
            ra.read_store(path)
        assert exc.value.offset == 19 + len(rec)

    def test_errors_share_a_store_error_base(self):
        for klass in (ra.CorruptHeader, ra.TruncatedFile, ra.DuplicateKey):
            assert issubclass(klass, ra.StoreError)
            assert issubclass(klass, ra.RadialignError)


class TestEmbeddingStore:
    def test_add_and_lookup(self, rng):
        store = ra.EmbeddingStore()
        v = rng.standard_normal(4)
        store.add("k", v)
        assert "k" in store
        assert len(store) == 1
        npt.assert_array_equal(store["k"], v)
        emb = store.embedding("k")
        assert emb.id == "k"
        npt.assert_array_equal(emb.values, v)

    def test_duplicate_add_rejected(self, rng):
        store = ra.EmbeddingStore()
        store.add("k", rng.standard_normal(3))
        with pytest.raises(ValueError):
            store.add("k", rng.standard_normal(3))

    def test_dimension_enforced(self, rng):
        store = ra.EmbeddingStore()
        store.add("a", rng.standard_normal(3))
        with pytest.raises(ra.DimensionMismatch):
            store.add("b", rng.standard_normal(4))

    def test_missing_key(self):
        store = ra.EmbeddingStore()
        with pytest.raises(ra.KeyNotFound) as exc:
            store["nope"]
        assert exc.value.key == "nope"

    def test_replace(self, rng):
        store = ra.EmbeddingStore()
        store.add("k", rng.standard_normal(3))
        new = rng.standard_normal(3)
        store.replace("k", new)
        npt.assert_array_equal(store["k"], new)
        with pytest.raises(ra.KeyNotFound):
            store.replace("other", new)
        with pytest.raises(ra.DimensionMismatch):
            store.replace("k", rng.standard_normal(5))

    def test_iteration_order_is_insertion_order(self, rng):
        store = ra.EmbeddingStore()
        keys = ["z", "a", "", "m"]
        for k in keys:
            store.add(k, rng.standard_normal(2))
        assert list(store) == keys
        assert list(store.keys()) == keys

    def test_vectors_widen_to_float64(self):
        store = ra.EmbeddingStore()
        store.add("k", np.array([1, 2, 3], dtype=np.float32))
        assert store["k"].dtype == np.float64

    def test_unsupported_dtype(self):
        with pytest.raises(ValueError):
            ra.EmbeddingStore(dtype=np.int32)


class TestHierarchyLoader:
    def test_round_trip(self, tmp_path, toy_files):
        _, hier_path, records, store = toy_files
        loaded = ra.load_hierarchies(hier_path, store=store)
        assert len(loaded) == len(records)
        first = loaded[0]
        assert first.image_id == records[0].image_id
        assert first.positives == records[0].positives
        assert first.negatives == records[0].negatives
        assert first.has_negatives
        assert len(first.caption_keys()) == 8

    def test_blank_lines_skipped(self, tmp_path):
        rec = {
            "image_id": "i",
            "image_key": "img",
            "positives": [{"text": f"t{i}", "key": f"k{i}"} for i in range(4)],
        }
        path = tmp_path / "h.jsonl"
        path.write_text("\n" + json.dumps(rec) + "\n\n")
        loaded = ra.load_hierarchies(path)
        assert len(loaded) == 1
        assert not loaded[0].has_negatives

    def test_invalid_json_reports_line(self, tmp_path):
        path = tmp_path / "h.jsonl"
        good = json.dumps(
            {
                "image_id": "i",
                "image_key": "img",
                "positives": [{"text": "t", "key": f"k{i}"} for i in range(4)],
            }
        )
        path.write_text(good + "\n{broken\n")
        with pytest.raises(ra.SchemaError) as exc:
            ra.load_hierarchies(path)
        assert exc.value.line == 2

    def test_wrong_positive_count(self, tmp_path):
        path = tmp_path / "h.jsonl"
        rec = {
            "image_id": "i",
            "image_key": "img",
            "positives": [{"text": "t", "key": "k"}] * 3,
        }
        path.write_text(json.dumps(rec) + "\n")
        with pytest.raises(ra.SchemaError) as exc:
            ra.load_hierarchies(path)
        assert exc.value.line == 1

    def test_caption_needs_text_and_key(self, tmp_path):
        path = tmp_path / "h.jsonl"
        rec = {
            "image_id": "i",
            "image_key": "img",
            "positives": [{"text": "t"}] * 4,
        }
        path.write_text(json.dumps(rec) + "\n")
        with pytest.raises(ra.SchemaError):
            ra.load_hierarchies(path)

    def test_unresolved_keys_counted(self, tmp_path, rng):
        store = ra.EmbeddingStore()
        store.add("img", rng.standard_normal(2))
        rec = {
            "image_id": "i",
            "image_key": "img",
            "positives": [{"text": "t", "key": f"miss{i}"} for i in range(4)],
        }
        path = tmp_path / "h.jsonl"
        path.write_text(json.dumps(rec) + "\n")
        with pytest.raises(ra.KeyNotFound) as exc:
            ra.load_hierarchies(path, store=store)
        assert exc.value.key == "miss0"
        assert "line 1" in str(exc.value)
        assert "4 unresolved key(s) in total" in str(exc.value)

    def test_record_validation_direct(self):
        caps = tuple(ra.Caption(text=f"t{i}", key=f"k{i}") for i in range(4))
        with pytest.raises(ra.SchemaError):
            ra.HierarchyRecord(image_id="i", image_key="img", positives=caps[:3])
        with pytest.raises(ra.SchemaError):
            ra.HierarchyRecord(
                image_id="i", image_key="img", positives=caps, negatives=caps[:2]
            )


class TestPairsLoader:
    def test_three_and_four_fields(self, tmp_path):
        path = tmp_path / "p.tsv"
        path.write_text("cat\tanimal\t9.2\tN\ndog\tpet\t7.0\n\n")
        pairs = ra.load_pairs(path)
        assert len(pairs) == 2
        assert pairs[0] == ra.LexicalPair(word1="cat", word2="animal", score=9.2, pos="N")
        assert pairs[1].pos is None

    def test_bad_field_count(self, tmp_path):
        path = tmp_path / "p.tsv"
        path.write_text("just\ttwo\n")
        with pytest.raises(ra.SchemaError) as exc:
            ra.load_pairs(path)
        assert exc.value.line == 1

    def test_bad_score(self, tmp_path):
        path = tmp_path / "p.tsv"
        path.write_text("a\tb\tnot-a-number\n")
        with pytest.raises(ra.SchemaError):
            ra.load_pairs(path)
        path.write_text("a\tb\tnan\n")
        with pytest.raises(ra.SchemaError):
            ra.load_pairs(path)

    def test_duplicate_pair(self, tmp_path):
        path = tmp_path / "p.tsv"
        path.write_text("a\tb\t1.0\na\tb\t2.0\n")
        with pytest.raises(ra.SchemaError) as exc:
            ra.load_pairs(path)
        assert exc.value.line == 2


class TestLabelTaskLoader:
    def make_task_obj(self):
        return {
            "coarse_labels": [{"text": "animal", "key": "c.animal"}],
            "fine_labels": [{"text": "cat", "key": "f.cat"}],
            "images": [
                {"image_id": "i1", "key": "img.i1", "coarse": "animal", "fine": "cat"}
            ],
        }

    def test_round_trip(self, tmp_path):
        path = tmp_path / "task.json"
        path.write_text(json.dumps(self.make_task_obj()))
        task = ra.load_label_task(path)
        assert task.coarse[0].text == "animal"
        assert task.fine[0].key == "f.cat"
        assert task.images[0].coarse == "animal"
        assert [l.text for l in task.all_labels()] == ["animal", "cat"]

    def test_ground_truth_membership_enforced(self, tmp_path):
        obj = self.make_task_obj()
        obj["images"][0]["fine"] = "dog"
        path = tmp_path / "task.json"
        path.write_text(json.dumps(obj))
        with pytest.raises(ra.SchemaError):
            ra.load_label_task(path)

    def test_missing_sections(self, tmp_path):
        for missing in ("coarse_labels", "fine_labels", "images"):
            obj = self.make_task_obj()
            del obj[missing]
            path = tmp_path / "task.json"
            path.write_text(json.dumps(obj))
            with pytest.raises(ra.SchemaError) as exc:
                ra.load_label_task(path)
            assert exc.value.field == missing


class TestKnnTaskLoader:
    def test_round_trip(self, tmp_path):
        obj = {
            "queries": [{"key": "img.1", "gt": "cap.1"}],
            "corpus": ["cap.1", "cap.2"],
        }
        path = tmp_path / "knn.json"
        path.write_text(json.dumps(obj))
        task = ra.load_knn_task(path)
        assert task.queries == (("img.1", "cap.1"),)
        assert task.corpus == ("cap.1", "cap.2")

    def test_corpus_optional(self, tmp_path):
        path = tmp_path / "knn.json"
        path.write_text(json.dumps({"queries": [{"key": "a", "gt": "b"}]}))
        assert ra.load_knn_task(path).corpus is None

    def test_empty_queries_rejected(self, tmp_path):
        path = tmp_path / "knn.json"
        path.write_text(json.dumps({"queries": []}))
        with pytest.raises(ra.SchemaError):
            ra.load_knn_task(path)


class TestMetadata:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "run.meta"
        write_metadata(path, {"seed": 7, "lr": 0.001, "note": "a=b"})
        back = read_metadata(path)
        assert back["seed"] == "7"
        assert back["lr"] == "0.001"
        assert back["note"] == "a=b"
