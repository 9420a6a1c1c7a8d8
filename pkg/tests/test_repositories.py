"""产物仓储与运行清单测试"""

import asyncio

import numpy as np
import pytest

from sqg_rs.api import ManifestMismatch
from sqg_rs.repositories import ArtifactRepository, ManifestRepository
from sqg_rs.repositories.artifact_repository import krn1_bytes, read_krn1


class TestKrn1:
    def test_header(self):
        data = krn1_bytes(np.zeros((2, 3, 4)), 0.9)
        header, _, payload = data.partition(b"\n")
        assert header == b"KRN1 2 3 4 0.9"
        assert len(payload) == 2 * 3 * 4 * 8

    def test_two_dimensional_input(self):
        header = krn1_bytes(np.ones((4, 4)), 1.0).split(b"\n", 1)[0]
        assert header == b"KRN1 1 4 4 1.0"

    def test_rejects_vectors(self):
        with pytest.raises(ValueError):
            krn1_bytes(np.zeros(5), 0.9)

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "bad.krn1"
        path.write_bytes(krn1_bytes(np.zeros((1, 2, 2)), 0.9)[:-8])
        with pytest.raises(ValueError):
            read_krn1(path)


class TestArtifactRepository:
    async def test_json(self, out_dir):
        repository = ArtifactRepository(out_dir)
        await repository.write_json("report.json", {"slope": np.float64(2.0), "values": np.arange(3)})
        assert repository.read_json("report.json") == {"slope": 2.0, "values": [0, 1, 2]}
        assert repository.written == ["report.json"]

    async def test_csv(self, out_dir):
        repository = ArtifactRepository(out_dir)
        rows = [{"eps": 0.25, "diff_norm": 1.5, "alpha": -0.22, "t_star": 0.0625}]
        await repository.write_csv("convergence.csv", "convergence", rows)
        assert repository.read_csv("convergence.csv") == [
            {"eps": "0.25", "diff_norm": "1.5", "alpha": "-0.22", "t_star": "0.0625"}
        ]

    async def test_csv_rejects_bad_rows(self, out_dir):
        repository = ArtifactRepository(out_dir)
        with pytest.raises(ValueError):
            await repository.write_csv("moments.csv", "moments", [[0.5, 1.0]])
        with pytest.raises(ValueError):
            await repository.write_csv("other.csv", "histogram", [])

    async def test_krn1(self, out_dir):
        repository = ArtifactRepository(out_dir)
        values = np.arange(12, dtype=float).reshape(1, 3, 4)
        path = await repository.write_krn1("field.krn1", values, 0.9)
        loaded, mu = read_krn1(path)
        assert np.array_equal(loaded, values)
        assert mu == 0.9

    def test_rejects_escaping_paths(self, out_dir):
        repository = ArtifactRepository(out_dir)
        with pytest.raises(ValueError):
            repository.resolve("../outside.json")
        assert repository.resolve("nested/ok.json").parent.name == "nested"

    async def test_concurrent_writes(self, out_dir):
        repository = ArtifactRepository(out_dir)
        await asyncio.gather(*(repository.write_json(f"part_{q}.json", {"q": q}) for q in range(8)))
        assert sorted(repository.written) == sorted(f"part_{q}.json" for q in range(8))


class TestManifestRepository:
    @staticmethod
    async def _run(out_dir, seed=0, mu="9/10"):
        artifacts = ArtifactRepository(out_dir)
        await artifacts.write_json("result.json", {"mu": mu})
        manifest = ManifestRepository(out_dir)
        await manifest.write("structure generate", {"structure": {"mu": mu}}, "hash", seed, artifacts.written)
        return manifest

    async def test_write_and_verify(self, out_dir):
        manifest = await self._run(out_dir)
        payload = manifest.load()
        assert payload["command"] == "structure generate"
        assert set(payload["versions"]) == {"python", "numpy", "scipy", "sympy"}
        assert manifest.verify() == {"missing": [], "corrupt": []}

    async def test_detects_corruption(self, out_dir):
        manifest = await self._run(out_dir)
        (out_dir / "result.json").write_text("{}", encoding="utf-8")
        assert manifest.verify()["corrupt"] == ["result.json"]

    async def test_detects_missing(self, out_dir):
        manifest = await self._run(out_dir)
        (out_dir / "result.json").unlink()
        assert manifest.verify()["missing"] == ["result.json"]

    def test_missing_manifest(self, out_dir):
        with pytest.raises(ManifestMismatch):
            ManifestRepository(out_dir).load()

    async def test_compare(self, tmp_path):
        first = await self._run(tmp_path / "a")
        same = await self._run(tmp_path / "b")
        other = await self._run(tmp_path / "c", seed=3, mu="4/5")
        assert first.compare(same)["identical"]
        report = first.compare(other)
        assert report["seed_mismatch"]
        assert report["config_diff"] == {"structure.mu": ["9/10", "4/5"]}
        assert report["artifact_diff"] == ["result.json"]
        assert not report["identical"]
