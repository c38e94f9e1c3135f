import struct

import numpy as np
import pytest

from projeq import data, su2


class TestIdx:
    def test_image_fixture_roundtrip(self, tmp_path):
        # handcrafted bytes: 2 images of 2x2
        path = tmp_path / "imgs.idx"
        pixels = bytes([0, 51, 102, 153, 204, 255, 0, 128])
        with open(path, "wb") as f:
            f.write(struct.pack(">I", 0x00000803))
            f.write(struct.pack(">3I", 2, 2, 2))
            f.write(pixels)
        arr = data.read_idx(path)
        assert arr.shape == (2, 2, 2)
        assert arr[0, 0, 0] == 0.0
        assert arr[0, 0, 1] == pytest.approx(51 / 255)
        assert arr[1, 0, 1] == pytest.approx(1.0)

    def test_label_fixture(self, tmp_path):
        path = tmp_path / "labels.idx"
        with open(path, "wb") as f:
            f.write(struct.pack(">I", 0x00000801))
            f.write(struct.pack(">I", 3))
            f.write(bytes([7, 0, 9]))
        labels = data.read_idx(path)
        assert labels.tolist() == [7, 0, 9]

    def test_wrong_magic(self, tmp_path):
        path = tmp_path / "bad.idx"
        path.write_bytes(struct.pack(">I", 0xDEADBEEF))
        with pytest.raises(data.IdxMagicError):
            data.read_idx(path)

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "trunc.idx"
        with open(path, "wb") as f:
            f.write(struct.pack(">I", 0x00000803))
            f.write(struct.pack(">3I", 2, 2, 2))
            f.write(bytes([1, 2, 3]))  # needs 8
        with pytest.raises(data.IdxTruncationError):
            data.read_idx(path)

    def test_truncated_header(self, tmp_path):
        path = tmp_path / "short.idx"
        path.write_bytes(struct.pack(">I", 0x00000803) + b"\x00\x00")
        with pytest.raises(data.IdxTruncationError):
            data.read_idx(path)

    def test_writer_roundtrip(self, tmp_path):
        rng = np.random.default_rng(0)
        images = rng.uniform(size=(3, 4, 5))
        path = tmp_path / "rt.idx"
        data.write_idx_images(path, images)
        back = data.read_idx(path)
        assert back.shape == (3, 4, 5)
        assert np.max(np.abs(back - images)) < 1.0 / 255.0

        labels = np.array([1, 2, 10])
        lpath = tmp_path / "rtl.idx"
        data.write_idx_labels(lpath, labels)
        assert data.read_idx(lpath).tolist() == [1, 2, 10]


class TestRemapRule:
    def test_exhaustive_table(self):
        # all 10 labels x 3 flip choices against the prose rule
        expected = {}
        for label in range(10):
            expected[(label, 0)] = label  # no flip: never remapped
            if label <= 2:
                expected[(label, 1)] = label
                expected[(label, 2)] = label
            elif label <= 5:
                expected[(label, 1)] = label  # row (vertical) flip keeps it
                expected[(label, 2)] = data.NAN_CLASS  # column (horizontal) flip
            elif label <= 7:
                expected[(label, 1)] = data.NAN_CLASS
                expected[(label, 2)] = label
            else:
                expected[(label, 1)] = data.NAN_CLASS
                expected[(label, 2)] = data.NAN_CLASS
        assert len(expected) == 30
        for (label, flip), want in expected.items():
            assert data.remap_label(label, flip) == want


class TestGlyphs:
    def test_symmetry_classes(self):
        stamps = data.glyph_stamps()
        for label in range(10):
            s = stamps[label]
            row_sym = np.array_equal(s, s[::-1, :])
            col_sym = np.array_equal(s, s[:, ::-1])
            if label <= 2:
                assert row_sym and col_sym
            elif label <= 5:
                assert row_sym and not col_sym
            elif label <= 7:
                assert col_sym and not row_sym
            else:
                assert not row_sym and not col_sym

    def test_no_label_collisions(self):
        assert data.glyph_consistency_check()

    def test_dataset_contents(self):
        ds = data.gen_flip_dataset(200, seed=3)
        assert ds.images.shape == (200, 16, 16)
        assert set(np.unique(ds.labels)) <= set(range(11))
        # NaN class must only arise from the documented (label, flip) pairs
        for img_label, base, flip in zip(ds.labels, ds.base_labels, ds.flips):
            assert img_label == data.remap_label(int(base), int(flip))

    def test_per_sample_purity(self):
        small = data.gen_flip_dataset(10, seed=5)
        large = data.gen_flip_dataset(50, seed=5)
        assert np.array_equal(small.images, large.images[:10])
        assert np.array_equal(small.labels, large.labels[:10])

    def test_determinism(self):
        a = data.gen_flip_dataset(20, seed=9)
        b = data.gen_flip_dataset(20, seed=9)
        assert np.array_equal(a.images, b.images)
        c = data.gen_flip_dataset(20, seed=10)
        assert not np.array_equal(a.images, c.images)

    def test_external_arrays_mode(self):
        rng = np.random.default_rng(1)
        images = rng.uniform(size=(30, 9, 9))
        labels = rng.integers(0, 10, size=30)
        ds = data.flip_dataset_from_arrays(images, labels, seed=2)
        for img_label, base, flip in zip(ds.labels, ds.base_labels, ds.flips):
            assert img_label == data.remap_label(int(base), int(flip))
        flipped = [i for i in range(30) if ds.flips[i] == 1]
        if flipped:
            i = flipped[0]
            assert np.array_equal(ds.images[i], images[i][::-1, :])


class TestSpinorPrototypes:
    def test_confusion_structure(self):
        protos = data.spinor_prototypes()
        assert np.array_equal(protos[0]["positions"], protos[2]["positions"])
        assert np.array_equal(protos[1]["positions"], protos[3]["positions"])
        assert np.array_equal(protos[0]["spinors"], protos[1]["spinors"])
        assert np.array_equal(protos[2]["spinors"], protos[3]["spinors"])
        assert not np.array_equal(protos[0]["positions"], protos[1]["positions"])
        assert not np.array_equal(protos[0]["spinors"], protos[2]["spinors"])
        targets = [p["target"] for p in protos]
        for i in range(4):
            assert np.linalg.norm(targets[i]) == pytest.approx(1.0)
            for j in range(i + 1, 4):
                assert np.linalg.norm(targets[i] - targets[j]) > 0.1

    def test_clean_generation_reproduces_prototypes(self):
        protos = data.spinor_prototypes()
        ds = data.gen_spinor_dataset(40, 0.0, seed=4, rotate=False)
        for i in range(40):
            c = int(ds.classes[i])
            assert np.array_equal(ds.positions[i], protos[c]["positions"])
            assert np.array_equal(ds.spinors[i], protos[c]["spinors"])
            assert np.array_equal(ds.targets[i], protos[c]["target"])

    def test_rotated_generation_consistent(self):
        protos = data.spinor_prototypes()
        ds = data.gen_spinor_dataset(30, 0.0, seed=5, rotate=True)
        for i in range(30):
            c = int(ds.classes[i])
            # rotations preserve the pairwise position geometry
            gram = ds.positions[i] @ ds.positions[i].T
            gram0 = protos[c]["positions"] @ protos[c]["positions"].T
            assert np.max(np.abs(gram - gram0)) < 1e-10
            assert np.linalg.norm(ds.targets[i]) == pytest.approx(1.0)

    def test_rotation_equivariance_of_labels(self):
        # rotating a clean sample and its target together keeps a perfect
        # equivariant predictor at zero loss
        from projeq import spinornet
        from projeq import autodiff as ad

        rng = np.random.default_rng(6)
        ds = data.gen_spinor_dataset(4, 0.0, seed=6, rotate=False)
        net = spinornet.SpinorNet("squared-features", seed=7)
        base_out = net.forward(ds.positions, ds.spinors).value
        base_gap = ad.per_sample_sign_loss(base_out, ds.targets)
        q = su2.random_unit_quaternion(rng)
        r = su2.quat_to_rotation(q)
        u = su2.wigner(0.5, q)
        rot_out = net.forward(ds.positions @ r.T, ds.spinors @ u.T).value
        rot_gap = ad.per_sample_sign_loss(rot_out, ds.targets @ u.T)
        assert np.max(np.abs(base_gap - rot_gap)) < 1e-9

    def test_noise_bounds(self):
        with pytest.raises(ValueError):
            data.gen_spinor_dataset(5, 0.5, seed=1, rotate=False)
        with pytest.raises(ValueError):
            data.gen_spinor_dataset(5, -0.1, seed=1, rotate=False)

    def test_per_sample_purity(self):
        small = data.gen_spinor_dataset(8, 0.2, seed=8, rotate=True)
        large = data.gen_spinor_dataset(32, 0.2, seed=8, rotate=True)
        assert np.array_equal(small.positions, large.positions[:8])
        assert np.array_equal(small.targets, large.targets[:8])
