"""HTTP service tests, run in-process against the FastAPI app.

Each endpoint is a pure function of its request body, so the tests check
round-trip file contents, determinism, and the 422 mapping of domain errors.
"""

import numpy as np
import pytest
from fastapi.testclient import TestClient

from redbench import decode, parse_packet_log
from redbench.files import format_dat, parse_dat
from redbench.service import create_app

SCRIPT = "-a 10.0.0.2 -T UDP -C 100 -c 512 -t 2000\n"


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


class TestHealth:
    def test_health(self, client):
        r = client.get("/health")
        assert r.status_code == 200
        assert r.json() == {"status": "ok"}


class TestSim:
    def test_basic_run_produces_log_and_trace(self, client):
        r = client.post("/sim", json={"script": SCRIPT, "seed": 3})
        assert r.status_code == 200
        body = r.json()
        assert body["sent"] == body["delivered"] + body["dropped"] + body["in_system"]
        assert body["sent"] == 200

        entries = parse_packet_log(body["recv_log"])
        assert len(entries) == body["delivered"] + body["dropped"]
        report = decode(entries)
        assert report.total.total_packets == body["delivered"]

        names, data = parse_dat(body["queue_dat"])
        assert names == ["t", "Q", "Qhat"]
        assert data.shape[0] > 0
        assert "# config: cmd=sim seed=3" in body["queue_dat"]

    def test_t_end_defaults_to_longest_flow(self, client):
        r = client.post("/sim", json={"script": SCRIPT})
        assert r.status_code == 200
        assert "t_end=2.0" in r.json()["queue_dat"].splitlines()[1]

    def test_deterministic_for_fixed_seed(self, client):
        req = {
            "script": "-a h2 -T UDP -C 500 -c 256 -t 1000\n",
            "seed": 17,
            "link": {"capacity": 500_000.0, "buffer": 8},
        }
        a = client.post("/sim", json=req).json()
        b = client.post("/sim", json=req).json()
        assert a == b

    def test_red_and_droptail_disciplines_differ(self, client):
        base = {
            "script": "-a h2 -T UDP -C 2000 -c 512 -t 1000\n",
            "seed": 5,
            "link": {"capacity": 1_000_000.0, "buffer": 25, "discipline": "red"},
        }
        red = client.post("/sim", json=base).json()
        base["link"]["discipline"] = "droptail"
        tail = client.post("/sim", json=base).json()
        assert red["dropped"] > 0
        assert tail["dropped"] > 0
        assert red["recv_log"] != tail["recv_log"]

    def test_bad_script_is_422_with_line(self, client):
        r = client.post("/sim", json={"script": "-a h2 -X 5\n"})
        assert r.status_code == 422
        assert "line 1" in r.json()["detail"]

    def test_empty_script_is_422(self, client):
        r = client.post("/sim", json={"script": "# nothing\n"})
        assert r.status_code == 422
        assert "no flows" in r.json()["detail"]

    def test_bad_link_is_422(self, client):
        r = client.post(
            "/sim", json={"script": SCRIPT, "link": {"buffer": 0}}
        )
        assert r.status_code == 422
        assert "buffer" in r.json()["detail"]

    def test_missing_body_field_is_422(self, client):
        assert client.post("/sim", json={}).status_code == 422

    def test_tcp_with_zero_feedback_delay_is_422(self, client):
        r = client.post(
            "/sim",
            json={"script": "-a h -T TCP -c 512 -t 1000\n", "t_end": 1.0},
        )
        assert r.status_code == 422
        assert "tcp_rtt_base" in r.json()["detail"]


class TestDecode:
    LOG = (
        "#red-bench-log v1\n"
        "1 1 512 0.0 0.5\n"
        "1 2 512 1.0 1.25\n"
        "1 3 512 2.0 -\n"
    )

    def test_report_only(self, client):
        r = client.post("/decode", json={"log": self.LOG})
        assert r.status_code == 200
        body = r.json()
        assert "***** TOTAL RESULTS *****" in body["report"]
        assert "Packets dropped      = 1 (33.33 %)" in body["report"]
        assert body["bitrate_dat"] is None
        assert body["delay_dat"] is None
        assert body["jitter_dat"] is None

    def test_binned_tables(self, client):
        r = client.post(
            "/decode",
            json={"log": self.LOG, "bitrate_ms": 1000.0, "delay_ms": 500.0},
        )
        assert r.status_code == 200
        body = r.json()
        names, data = parse_dat(body["bitrate_dat"])
        assert names == ["t", "flow1", "aggregate"]
        np.testing.assert_allclose(data[:, 0], [0.0, 1.0])
        np.testing.assert_allclose(data[:, 1], [512 * 8 / 1e6 * 1000, 512 * 8 / 1e6 * 1000])
        # Receive times 0.5 and 1.25 land in 500 ms bins 1 and 2, so the
        # table covers exactly those two bins.
        names_d, data_d = parse_dat(body["delay_dat"])
        assert names_d == ["t", "flow1", "aggregate"]
        np.testing.assert_allclose(data_d[:, 0], [0.5, 1.0])
        np.testing.assert_allclose(data_d[:, 1], [0.5, 0.25])
        assert body["jitter_dat"] is None

    def test_bad_log_is_422(self, client):
        r = client.post("/decode", json={"log": "not a log\n"})
        assert r.status_code == 422
        assert "line 1" in r.json()["detail"]

    def test_bad_bin_is_422(self, client):
        r = client.post("/decode", json={"log": self.LOG, "bitrate_ms": -5.0})
        assert r.status_code == 422


class TestFluid:
    def test_det_mode_trajectory(self, client):
        r = client.post("/fluid", json={"mode": "det", "t_end": 2.0})
        assert r.status_code == 200
        body = r.json()
        assert list(body["files"]) == ["trajectory.dat"]
        names, data = parse_dat(body["files"]["trajectory.dat"])
        assert names == ["t", "W", "Q", "Qhat"]
        np.testing.assert_allclose(data[0], [0.0, 1.0, 0.0, 0.0], atol=1e-12)
        assert np.all(data[:, 1] >= 1.0)
        assert np.all(data[:, 2] >= 0.0)
        assert np.all(data[:, 2] <= 50.0)
        # summary mirrors the last row at full precision
        assert body["summary"]["final_w"] == pytest.approx(data[-1, 1], abs=5e-7)
        assert body["summary"]["final_q"] == pytest.approx(data[-1, 2], abs=5e-7)

    def test_det_mode_ignores_noise_flag(self, client):
        # The config comment echoes the requested flag, but the dynamics and
        # the summary must be identical either way.
        a = client.post("/fluid", json={"mode": "det", "t_end": 1.0, "noise": True})
        b = client.post("/fluid", json={"mode": "det", "t_end": 1.0, "noise": False})
        assert a.json()["summary"] == b.json()["summary"]
        _, data_a = parse_dat(a.json()["files"]["trajectory.dat"])
        _, data_b = parse_dat(b.json()["files"]["trajectory.dat"])
        np.testing.assert_array_equal(data_a, data_b)

    def test_sde_mode_files(self, client):
        req = {
            "mode": "sde",
            "t_end": 1.0,
            "n_traj": 40,
            "save_trajectories": 2,
            "seed": 9,
        }
        r = client.post("/fluid", json=req)
        assert r.status_code == 200
        body = r.json()
        assert sorted(body["files"]) == ["mean.dat", "traj1.dat", "traj2.dat", "var.dat"]
        names, mean = parse_dat(body["files"]["mean.dat"])
        assert names == ["t", "W", "Q", "Qhat"]
        _, var = parse_dat(body["files"]["var.dat"])
        assert mean.shape == var.shape
        assert np.all(var[:, 1:] >= 0.0)
        again = client.post("/fluid", json=req)
        assert again.json() == body

    def test_fp_mode_density(self, client):
        r = client.post("/fluid", json={"mode": "fp", "t_end": 0.05})
        assert r.status_code == 200
        body = r.json()
        assert list(body["files"]) == ["density.dat"]
        names, data = parse_dat(body["files"]["density.dat"])
        assert names == ["x", "density"]
        assert data.shape[0] == 96
        assert body["summary"]["mass"] == pytest.approx(1.0, abs=1e-9)
        assert body["summary"]["steps"] == 50.0

    def test_fp_stability_violation_is_422(self, client):
        r = client.post("/fluid", json={"mode": "fp", "t_end": 0.05, "fp_dt": 0.01})
        assert r.status_code == 422
        assert "diffusive bound" in r.json()["detail"]

    def test_unknown_mode_is_422(self, client):
        assert client.post("/fluid", json={"mode": "magic"}).status_code == 422


class TestCompare:
    @staticmethod
    def dat(q, qh, t_end=10.0, n=11):
        t = np.linspace(0.0, t_end, n)
        data = np.column_stack([t, np.full(n, q), np.full(n, qh)])
        return format_dat(["t", "Q", "Qhat"], data, {"cmd": "test"})

    def test_identical_series(self, client):
        text = self.dat(4.0, 3.0)
        r = client.post(
            "/compare", json={"packet_dat": text, "fluid_dat": text}
        )
        assert r.status_code == 200
        body = r.json()
        assert body["metrics"]["rel_l1_q"] == 0.0
        assert body["metrics"]["mean_q_a"] == 4.0
        assert body["summary"].startswith("summary: ")
        assert "comparison window" in body["report"]

    def test_offset_series(self, client):
        r = client.post(
            "/compare",
            json={
                "packet_dat": self.dat(5.0, 5.0),
                "fluid_dat": self.dat(4.0, 4.0),
                "grid_dt": 1.0,
            },
        )
        assert r.status_code == 200
        assert r.json()["metrics"]["rel_l1_q"] == pytest.approx(0.25)

    def test_missing_column_is_422(self, client):
        bad = format_dat(["t", "Q"], np.zeros((2, 2)), {})
        r = client.post(
            "/compare", json={"packet_dat": bad, "fluid_dat": self.dat(1.0, 1.0)}
        )
        assert r.status_code == 422
        assert "Qhat" in r.json()["detail"]

    def test_disjoint_ranges_is_422(self, client):
        r = client.post(
            "/compare",
            json={
                "packet_dat": self.dat(1.0, 1.0),
                "fluid_dat": self.dat(1.0, 1.0),
                "warmup": 100.0,
            },
        )
        assert r.status_code == 422
        assert "overlap" in r.json()["detail"]
