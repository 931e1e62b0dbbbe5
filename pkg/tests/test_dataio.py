import csv
import json
import struct

import numpy as np
import pytest

from hdseizure.dataio import (
    MODEL_MAGIC,
    CohortSpec,
    generate_synthetic_cohort,
    load_model,
    read_cohort,
    read_feature_cohort,
    read_features,
    read_record,
    read_report,
    save_model,
    synthetic_model_cohort,
    write_cohort,
    write_evolution_csv,
    write_features,
    write_matrices_csv,
    write_record,
    write_report,
    write_reports_csv,
    write_sweep_csv,
)
from hdseizure.encoding import build_codebooks, fit_ranges
from hdseizure.errors import CorruptModelError, IncompatibleModelsError, ParseError
from hdseizure.evaluation import EvalReport
from hdseizure.features import FeatureMatrix, SignalRecord
from hdseizure.hypervector import random_hypervector
from hdseizure.training import ClassModel

SMALL = dict(num_subjects=2, records_per_subject=3, fs=64.0, num_channels=2,
             seizure_sec=8.0, non_seizure_sec=8.0, seizure_freq_range=(3.0, 8.0))


class TestCohortSpec:
    def test_defaults_valid(self):
        spec = CohortSpec()
        assert spec.num_subjects == 20
        assert spec.fs == 256.0
        assert spec.num_channels == 18

    @pytest.mark.parametrize("kw", [
        dict(num_subjects=0),
        dict(records_per_subject=2),
        dict(fs=0.0),
        dict(num_channels=0),
        dict(seizure_sec=0.0),
        dict(non_seizure_sec=-1.0),
        dict(shared_background_weight=1.5),
        dict(seizure_freq_range=(0.0, 8.0)),
        dict(seizure_freq_range=(8.0, 3.0)),
        dict(seizure_freq_range=(3.0, 200.0)),
        dict(seizure_amp_gain=0.0),
    ])
    def test_invalid_fields(self, kw):
        with pytest.raises(ValueError):
            CohortSpec(**kw)


class TestSyntheticCohort:
    def test_same_seed_bit_identical(self):
        a = generate_synthetic_cohort(CohortSpec(**SMALL, seed=9))
        b = generate_synthetic_cohort(CohortSpec(**SMALL, seed=9))
        for ra, rb in zip(a[0] + a[1], b[0] + b[1]):
            assert np.array_equal(ra.samples, rb.samples)
            assert np.array_equal(ra.labels, rb.labels)

    def test_seed_changes_signal(self):
        a = generate_synthetic_cohort(CohortSpec(**SMALL, seed=1))
        b = generate_synthetic_cohort(CohortSpec(**SMALL, seed=2))
        assert not np.allclose(a[0][0].samples, b[0][0].samples)

    def test_shapes_and_labels(self):
        spec = CohortSpec(**SMALL, seed=3)
        cohort = generate_synthetic_cohort(spec)
        assert len(cohort) == 2
        assert all(len(records) == 3 for records in cohort)
        rec = cohort[1][2]
        n = round((spec.seizure_sec + spec.non_seizure_sec) * spec.fs)
        assert rec.samples.shape == (2, n)
        n_ns = round(spec.non_seizure_sec * spec.fs)
        assert not rec.labels[:n_ns].any()
        assert rec.labels[n_ns:].all()
        assert rec.subject_id == "s001"
        assert rec.record_id == "r02"

    def test_background_rms_scale(self):
        cohort = generate_synthetic_cohort(CohortSpec(**SMALL, seed=4))
        rec = cohort[0][0]
        ns = rec.samples[:, rec.labels == 0]
        assert 24.0 < ns.std() < 36.0

    def test_gain_one_leaves_background_untouched(self):
        base = dict(SMALL, seed=5)
        flat = generate_synthetic_cohort(CohortSpec(**base, seizure_amp_gain=1.0))
        loud = generate_synthetic_cohort(CohortSpec(**base, seizure_amp_gain=3.0))
        f, l = flat[0][0], loud[0][0]
        ns = f.labels == 0
        assert np.array_equal(f.samples[:, ns], l.samples[:, ns])
        assert not np.allclose(f.samples[:, ~ns], l.samples[:, ~ns])

    def test_seizure_band_power_raised(self):
        spec = CohortSpec(**SMALL, seed=6)
        cohort = generate_synthetic_cohort(spec)
        for records in cohort:
            for rec in records:
                s = rec.samples[0, rec.labels == 1]
                ns = rec.samples[0, rec.labels == 0]

                def band_power(x):
                    spec_x = np.abs(np.fft.rfft(x - x.mean())) ** 2
                    freqs = np.fft.rfftfreq(x.size, 1 / rec.fs)
                    return spec_x[(freqs >= 2.5) & (freqs <= 9.0)].sum() / x.size

                assert band_power(s) > 1.5 * band_power(ns)

    def test_default_channel_names(self):
        spec = CohortSpec(num_subjects=1, records_per_subject=3, fs=64.0,
                          seizure_sec=2.0, non_seizure_sec=2.0, seed=0)
        rec = generate_synthetic_cohort(spec)[0][0]
        assert len(rec.channels) == 18
        assert rec.channels[0] != "ch01"


class TestSyntheticModelCohort:
    def test_expected_similarity_structure(self):
        from hdseizure.similarity import pairwise_matrices

        models = synthetic_model_cohort(12, dim=10000, seed=2)
        ss, nsns, sns = pairwise_matrices(models).off_diagonal_means()
        assert abs(nsns - 0.745) < 0.02  # 1 - 2 * 0.15 * 0.85
        assert abs(ss - 0.545) < 0.02  # 1 - 2 * 0.35 * 0.65
        assert abs(sns - 0.5) < 0.02
        assert nsns > ss > sns

    def test_deterministic_and_validated(self):
        a = synthetic_model_cohort(3, dim=256, seed=1)
        b = synthetic_model_cohort(3, dim=256, seed=1)
        assert all(x.seizure == y.seizure for x, y in zip(a, b))
        with pytest.raises(ValueError):
            synthetic_model_cohort(0)
        with pytest.raises(ValueError):
            synthetic_model_cohort(3, s_flip=1.2)


def tiny_record(rng, channels=("c1", "c2"), n=64, fs=32.0):
    return SignalRecord(
        fs=fs,
        channels=list(channels),
        samples=rng.normal(0, 30, (len(channels), n)),
        labels=(rng.random(n) < 0.3).astype(np.uint8),
        record_id="r00",
        subject_id="s000",
    )


class TestRecordCsv:
    def test_round_trip(self, tmp_path):
        rec = tiny_record(np.random.default_rng(0))
        path = tmp_path / "rec.csv"
        write_record(rec, path)
        back = read_record(path)
        assert back.fs == rec.fs
        assert back.channels == rec.channels
        assert np.abs(back.samples - rec.samples).max() < 1e-9
        assert np.array_equal(back.labels, rec.labels)

    def test_crlf_equals_lf(self, tmp_path):
        rec = tiny_record(np.random.default_rng(1), n=16)
        lf = tmp_path / "lf.csv"
        write_record(rec, lf)
        text = lf.read_text()
        crlf = tmp_path / "crlf.csv"
        crlf.write_bytes(text.replace("\n", "\r\n").encode())
        a, b = read_record(lf), read_record(crlf)
        assert np.array_equal(a.samples, b.samples)
        assert np.array_equal(a.labels, b.labels)

    def test_missing_label_column(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("time_s,c1,c2\n0.0,1.0,2.0\n")
        with pytest.raises(ParseError) as err:
            read_record(path)
        assert "label" in str(err.value)
        assert err.value.line == 1

    def test_ragged_row(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("time_s,c1,label\n0.0,1.0,0\n0.5,2.0\n1.0,3.0,1\n")
        with pytest.raises(ParseError) as err:
            read_record(path)
        assert err.value.line == 3

    def test_non_numeric_cell(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("time_s,c1,label\n0.0,1.0,0\n0.5,oops,1\n")
        with pytest.raises(ParseError) as err:
            read_record(path)
        assert err.value.line == 3

    def test_unknown_label_value(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("time_s,c1,label\n0.0,1.0,0\n0.5,1.0,2\n")
        with pytest.raises(ParseError) as err:
            read_record(path)
        assert err.value.line == 3

    def test_too_few_rows(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("time_s,c1,label\n0.0,1.0,0\n")
        with pytest.raises(ParseError):
            read_record(path)


def tiny_features(rng, nwin=9, nfeat=6):
    return FeatureMatrix(
        values=rng.normal(size=(nwin, nfeat)),
        window_labels=(rng.random(nwin) < 0.4).astype(np.uint8),
        window_start_sec=np.arange(nwin) * 0.5,
        feature_names=[f"c{i % 2}:f{i}" for i in range(nfeat)],
        channels=["c0", "c1"],
        features_per_channel=3,
        record_id="r01",
        subject_id="s003",
    )


class TestFeatureCsv:
    def test_round_trip_exact(self, tmp_path):
        fm = tiny_features(np.random.default_rng(2))
        path = tmp_path / "f.csv"
        write_features(fm, path)
        back = read_features(path, record_id="r01", subject_id="s003")
        assert np.array_equal(back.values, fm.values)
        assert np.array_equal(back.window_labels, fm.window_labels)
        assert np.array_equal(back.window_start_sec, fm.window_start_sec)
        assert back.feature_names == fm.feature_names
        assert back.record_id == "r01"

    def test_bad_header(self, tmp_path):
        path = tmp_path / "f.csv"
        path.write_text("start,label,f0\n0.0,0,1.0\n")
        with pytest.raises(ParseError):
            read_features(path)


class TestCohortDirs:
    def test_signal_round_trip(self, tmp_path):
        cohort = generate_synthetic_cohort(CohortSpec(**SMALL, seed=7))
        d = tmp_path / "cohort"
        write_cohort(cohort, d)
        back = read_cohort(d)
        assert len(back) == len(cohort)
        for orig, rt in zip(cohort, back):
            for a, b in zip(orig, rt):
                assert b.subject_id == a.subject_id
                assert b.record_id == a.record_id
                assert np.abs(a.samples - b.samples).max() < 1e-9

    def test_feature_round_trip(self, tmp_path):
        rng = np.random.default_rng(3)
        cohort = [[tiny_features(rng) for _ in range(2)] for _ in range(2)]
        for i, recs in enumerate(cohort):
            for j, fm in enumerate(recs):
                fm.subject_id, fm.record_id = f"s{i:03d}", f"r{j:02d}"
        d = tmp_path / "feat"
        write_cohort(cohort, d, writer=write_features)
        back = read_feature_cohort(d)
        assert [[fm.record_id for fm in recs] for recs in back] == [
            ["r00", "r01"], ["r00", "r01"]]
        assert np.array_equal(back[1][0].values, cohort[1][0].values)

    def test_empty_dir_rejected(self, tmp_path):
        with pytest.raises(ParseError):
            read_cohort(tmp_path)


def fitted_books(rng, nfeat=5, dim=256, levels=6, seed=11):
    books = build_codebooks(nfeat, levels, dim, seed)
    return fit_ranges(books, rng.normal(size=(30, nfeat)))


class TestModelFile:
    def test_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(4)
        books = fitted_books(rng)
        model = ClassModel(
            seizure=random_hypervector(3, 100, 256),
            non_seizure=random_hypervector(3, 101, 256),
            kind="generalized",
            source_cohort="demo",
            subject_id="s005",
            codebook_ref="cb0",
        )
        path = tmp_path / "m.hdcm"
        save_model(model, books, path)
        back_model, back_books = load_model(path)
        assert back_model.seizure == model.seizure
        assert back_model.non_seizure == model.non_seizure
        assert back_model.kind == "generalized"
        assert back_model.source_cohort == "demo"
        assert back_model.subject_id == "s005"
        assert back_model.codebook_ref == "cb0"
        assert back_books.dim == books.dim
        assert back_books.num_levels == books.num_levels
        assert back_books.seed == books.seed
        assert all(a == b for a, b in zip(back_books.id_vectors, books.id_vectors))
        assert all(a == b for a, b in zip(back_books.level_vectors, books.level_vectors))
        assert np.array_equal(back_books.feature_min, books.feature_min)
        assert np.array_equal(back_books.feature_max, books.feature_max)

    def test_unfitted_ranges_round_trip(self, tmp_path):
        books = build_codebooks(4, 5, 128, 0)
        model = ClassModel(
            seizure=random_hypervector(0, 50, 128),
            non_seizure=random_hypervector(0, 51, 128),
        )
        path = tmp_path / "m.hdcm"
        save_model(model, books, path)
        _, back = load_model(path)
        assert not back.is_fitted

    def test_size_arithmetic(self, tmp_path):
        rng = np.random.default_rng(5)
        books = fitted_books(rng, nfeat=5, dim=10000, levels=20)
        model = ClassModel(
            seizure=random_hypervector(1, 60, 10000),
            non_seizure=random_hypervector(1, 61, 10000),
        )
        path = tmp_path / "m.hdcm"
        save_model(model, books, path)
        data = path.read_bytes()
        meta_len = struct.unpack_from("<I", data, 9)[0]
        assert len(data) == 13 + meta_len + (2 + 20 + 5) * 157 * 8

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "m.hdcm"
        path.write_bytes(b"NOPE" + b"\x00" * 40)
        with pytest.raises(CorruptModelError):
            load_model(path)

    def test_bad_version(self, tmp_path):
        rng = np.random.default_rng(6)
        books = fitted_books(rng)
        model = ClassModel(seizure=random_hypervector(2, 70, 256),
                           non_seizure=random_hypervector(2, 71, 256))
        path = tmp_path / "m.hdcm"
        save_model(model, books, path)
        data = bytearray(path.read_bytes())
        data[4] = 99
        path.write_bytes(bytes(data))
        with pytest.raises(CorruptModelError):
            load_model(path)

    def test_truncation(self, tmp_path):
        rng = np.random.default_rng(7)
        books = fitted_books(rng)
        model = ClassModel(seizure=random_hypervector(2, 80, 256),
                           non_seizure=random_hypervector(2, 81, 256))
        path = tmp_path / "m.hdcm"
        save_model(model, books, path)
        data = path.read_bytes()
        for cut in (3, 12, len(data) // 2, len(data) - 1):
            path.write_bytes(data[:cut])
            with pytest.raises(CorruptModelError):
                load_model(path)

    def test_garbled_metadata(self, tmp_path):
        blob = b"{not json"
        payload = MODEL_MAGIC + struct.pack("<BII", 1, 128, len(blob)) + blob
        path = tmp_path / "m.hdcm"
        path.write_bytes(payload)
        with pytest.raises(CorruptModelError):
            load_model(path)

    def test_dim_mismatch_rejected(self, tmp_path):
        rng = np.random.default_rng(8)
        books = fitted_books(rng, dim=256)
        model = ClassModel(seizure=random_hypervector(2, 90, 128),
                           non_seizure=random_hypervector(2, 91, 128))
        with pytest.raises(IncompatibleModelsError):
            save_model(model, books, tmp_path / "m.hdcm")


def tiny_report(rng, subject="s000", kind="personalized", n=24):
    truth = (rng.random(n) < 0.3).astype(np.uint8)
    preds = {k: (rng.random(n) < 0.3).astype(np.uint8)
             for k in ("raw", "bayes", "movavg")}
    from hdseizure.evaluation import _metrics_block

    return EvalReport(
        subject_id=subject,
        model_kind=kind,
        metrics=_metrics_block(truth, preds),
        truth=truth,
        p_seizure=rng.random(n),
        predictions=preds,
    )


class TestReports:
    def test_json_round_trip_with_series(self, tmp_path):
        report = tiny_report(np.random.default_rng(9))
        path = tmp_path / "r.json"
        write_report(report, path, include_series=True)
        back = read_report(path)
        assert back.subject_id == report.subject_id
        assert back.model_kind == report.model_kind
        assert back.metrics == report.metrics
        assert np.array_equal(back.truth, report.truth)
        assert np.array_equal(back.p_seizure, report.p_seizure)
        assert np.array_equal(back.predictions["bayes"], report.predictions["bayes"])

    def test_json_without_series(self, tmp_path):
        report = tiny_report(np.random.default_rng(10))
        path = tmp_path / "r.json"
        write_report(report, path)
        doc = json.loads(path.read_text())
        assert "series" not in doc
        back = read_report(path)
        assert back.metrics == report.metrics
        assert back.truth.size == 0

    def test_reports_csv(self, tmp_path):
        rng = np.random.default_rng(11)
        reports = [tiny_report(rng, subject=f"s{i:03d}") for i in range(3)]
        path = tmp_path / "r.csv"
        write_reports_csv(reports, path)
        rows = list(csv.reader(path.open()))
        assert rows[0][:2] == ["subject", "kind"]
        assert "duration.raw.f1" in rows[0]
        assert len(rows) == 4
        col = rows[0].index("episode.bayes.precision")
        assert float(rows[2][col]) == reports[1].metrics["episode.bayes.precision"]


class TestCurveCsvs:
    def test_matrices_csv(self, tmp_path):
        from hdseizure.similarity import pairwise_matrices

        mats = pairwise_matrices(synthetic_model_cohort(4, dim=256, seed=3))
        path = tmp_path / "mats.csv"
        write_matrices_csv(mats, path)
        rows = list(csv.reader(path.open()))
        assert rows[0] == ["matrix", "subject", *mats.subject_ids]
        assert len(rows) == 1 + 3 * 4
        assert float(rows[1][2]) == mats.s_to_s[0, 0] == 1.0

    def test_evolution_csv(self, tmp_path):
        from hdseizure.generalization import MergeConfig, evolution_curve

        models = synthetic_model_cohort(5, dim=256, seed=4)
        _, mean = evolution_curve(models, MergeConfig(), repetitions=2, seed=1)
        path = tmp_path / "evo.csv"
        write_evolution_csv(mean, path)
        rows = list(csv.reader(path.open()))
        assert rows[0][0] == "numSubjects"
        assert len(rows) == 1 + 5
        assert float(rows[1][1]) == mean.sim_ss[0]

    def test_sweep_csv(self, tmp_path):
        from hdseizure.hybrid import sweep_selection

        gen = {"f1_episode": np.array([0.5, 0.9]), "f1_duration": np.array([0.4, 0.8])}
        pers = {"f1_episode": np.array([0.7, 0.6]), "f1_duration": np.array([0.6, 0.5])}
        sweep = sweep_selection(gen, pers, thresholds=[0.0, 0.6, 1.0])
        path = tmp_path / "sweep.csv"
        write_sweep_csv(sweep, path)
        rows = list(csv.reader(path.open()))
        assert len(rows) == 4
        assert float(rows[1][4]) == sweep.oracle_f1_episode
