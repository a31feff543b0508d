import json

import numpy as np
import pytest

import omniview as ov
from omniview import formats
from omniview.cli import main
from conftest import psnr, smooth_sphere_image


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


class TestViewportsCommand:
    def test_default_sphere_covering(self, tmp_path, capsys):
        path = tmp_path / "tess.json"
        code, _, _ = run(capsys, "viewports", "--count", 240, "--fov", 24, "--size", 64, "-o", path)
        assert code == 0
        tess = formats.read_tessellation(path)
        assert tess.count == 240 and tess.fov == 24.0

    def test_single_viewport_at_origin(self, tmp_path, capsys):
        path = tmp_path / "tess.json"
        code, _, _ = run(capsys, "viewports", "--count", 1, "--fov", 24, "--size", 32, "-o", path)
        assert code == 0
        tess = formats.read_tessellation(path)
        assert tess.viewports[0].center == ov.SphereDir(0.0, 0.0)

    def test_rerun_byte_identical(self, tmp_path, capsys):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        run(capsys, "viewports", "--count", 12, "--fov", 24, "--size", 32, "-o", a)
        run(capsys, "viewports", "--count", 12, "--fov", 24, "--size", 32, "-o", b)
        assert a.read_bytes() == b.read_bytes()

    def test_invalid_params_exit_validation(self, tmp_path, capsys):
        code, _, err = run(capsys, "viewports", "--count", 0, "--fov", 24, "--size", 32,
                           "-o", tmp_path / "t.json")
        assert code == 4 and "error" in err

    def test_config_file_supplies_defaults(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"count": 5, "fov": 30.0, "size": 16}))
        path = tmp_path / "tess.json"
        code, _, _ = run(capsys, "viewports", "--config", cfg, "-o", path)
        assert code == 0
        tess = formats.read_tessellation(path)
        assert tess.count == 5 and tess.fov == 30.0

    def test_config_unknown_key_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"count": 5, "view_size": 16}))
        code, _, err = run(capsys, "viewports", "--config", cfg, "-o", tmp_path / "t.json")
        assert code == 4 and "view_size" in err

    def test_missing_required_flag_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["viewports", "--count", "5"])
        assert exc.value.code == 2


class TestRenderAndBlend:
    @pytest.fixture()
    def pipeline(self, tmp_path, capsys):
        w, h = 384, 192
        img = smooth_sphere_image(w, h)
        src = tmp_path / "src.png"
        formats.write_image(src, img)
        tess_path = tmp_path / "tess.json"
        run(capsys, "viewports", "--count", 240, "--fov", 24, "--size", 32, "-o", tess_path)
        return w, h, img, src, tess_path

    def test_render_blend_identity(self, pipeline, tmp_path, capsys, warm_kernels):
        w, h, img, src, tess_path = pipeline
        vp_dir = tmp_path / "vps"
        code, _, _ = run(capsys, "render", "--image", src, "--tessellation", tess_path,
                         "--out-dir", vp_dir)
        assert code == 0
        files = sorted(vp_dir.glob("viewport_*.png"))
        assert len(files) == 240
        out = tmp_path / "blend.png"
        code, stdout, _ = run(capsys, "blend", "--tessellation", tess_path,
                              "--viewport-dir", vp_dir, "--width", w, "--height", h,
                              "-o", out)
        assert code == 0
        assert "fallback_pixels: 0" in stdout
        back = formats.read_image(out)
        assert psnr(back.pixels, img.pixels) >= 40.0

    def test_render_matches_in_memory(self, pipeline, tmp_path, capsys):
        w, h, img, src, tess_path = pipeline
        vp_dir = tmp_path / "vps"
        run(capsys, "render", "--image", src, "--tessellation", tess_path, "--out-dir", vp_dir)
        tess = formats.read_tessellation(tess_path)
        # file round trip quantizes twice (source write + viewport write)
        quantized = formats.read_image(src)
        vimg = ov.render_viewport(quantized, tess.viewports[11])
        disk = formats.read_raster(tess_path.parent / "vps" / "viewport_011.png")
        assert np.max(np.abs(disk - vimg.pixels)) <= 0.5 / 255.0 + 1e-6

    def test_render_parallel_matches_serial(self, pipeline, tmp_path, capsys):
        w, h, img, src, tess_path = pipeline
        d1, d2 = tmp_path / "serial", tmp_path / "parallel"
        run(capsys, "render", "--image", src, "--tessellation", tess_path, "--out-dir", d1)
        run(capsys, "render", "--image", src, "--tessellation", tess_path, "--out-dir", d2,
            "--jobs", 4)
        for f1 in sorted(d1.glob("*.png")):
            assert f1.read_bytes() == (d2 / f1.name).read_bytes()

    def test_constant_image_renders_constant(self, tmp_path, capsys):
        src = tmp_path / "c.png"
        formats.write_image(src, ov.EquirectImage.full(64, 32, 0.5))
        tess_path = tmp_path / "tess.json"
        run(capsys, "viewports", "--count", 4, "--fov", 30, "--size", 16, "-o", tess_path)
        vp_dir = tmp_path / "vps"
        code, _, err = run(capsys, "render", "--image", src, "--tessellation", tess_path,
                           "--out-dir", vp_dir)
        assert code == 0 and err == ""
        for f in vp_dir.glob("*.png"):
            arr = formats.read_raster(f)
            assert np.all(arr == arr.flat[0])

    def test_non_two_to_one_warns(self, tmp_path, capsys):
        src = tmp_path / "odd.png"
        formats.write_image(src, ov.EquirectImage.full(60, 32, 0.5))
        tess_path = tmp_path / "tess.json"
        run(capsys, "viewports", "--count", 2, "--fov", 30, "--size", 8, "-o", tess_path)
        code, _, err = run(capsys, "render", "--image", src, "--tessellation", tess_path,
                           "--out-dir", tmp_path / "vps")
        assert code == 0 and "not 2:1" in err

    def test_blend_missing_viewport_names_index(self, pipeline, tmp_path, capsys):
        w, h, img, src, tess_path = pipeline
        vp_dir = tmp_path / "vps"
        run(capsys, "render", "--image", src, "--tessellation", tess_path, "--out-dir", vp_dir)
        (vp_dir / "viewport_017.png").unlink()
        out = tmp_path / "blend.png"
        code, _, err = run(capsys, "blend", "--tessellation", tess_path,
                           "--viewport-dir", vp_dir, "--width", w, "--height", h, "-o", out)
        assert code == 3 and "17" in err
        assert not out.exists()

    def test_single_viewport_blend_reports_fallbacks(self, tmp_path, capsys):
        src = tmp_path / "c.png"
        formats.write_image(src, ov.EquirectImage.full(128, 64, 0.5))
        tess_path = tmp_path / "tess.json"
        run(capsys, "viewports", "--count", 1, "--fov", 24, "--size", 16, "-o", tess_path)
        vp_dir = tmp_path / "vps"
        run(capsys, "render", "--image", src, "--tessellation", tess_path, "--out-dir", vp_dir)
        code, stdout, _ = run(capsys, "blend", "--tessellation", tess_path,
                              "--viewport-dir", vp_dir, "--width", 128, "--height", 64,
                              "-o", tmp_path / "b.png")
        assert code == 0
        fallback = int(stdout.split("fallback_pixels:")[1].strip())
        assert fallback > 0


class TestLiftAndNms:
    def test_empty_files(self, tmp_path, capsys):
        tess_path = tmp_path / "tess.json"
        run(capsys, "viewports", "--count", 4, "--fov", 24, "--size", 32, "-o", tess_path)
        empty = tmp_path / "empty.jsonl"
        empty.write_text("")
        out = tmp_path / "lifted.jsonl"
        code, _, _ = run(capsys, "lift", "--in", empty, "--tessellation", tess_path,
                         "--width", 512, "--height", 256, "-o", out)
        assert code == 0 and formats.read_detections(out) == []
        out2 = tmp_path / "fused.jsonl"
        code, _, _ = run(capsys, "nms", "--in", empty, "--width", 512, "--height", 256,
                         "-o", out2)
        assert code == 0 and formats.read_detections(out2) == []

    def test_center_box_lifts_to_image_center(self, tmp_path, capsys):
        tess_path = tmp_path / "tess.json"
        run(capsys, "viewports", "--count", 1, "--fov", 24, "--size", 64, "-o", tess_path)
        vdets = tmp_path / "vdets.jsonl"
        formats.write_detections(vdets, [ov.ViewportDetection(0, 0, 0.9, 24.0, 24.0, 16.0, 16.0)])
        out = tmp_path / "lifted.jsonl"
        code, _, _ = run(capsys, "lift", "--in", vdets, "--tessellation", tess_path,
                         "--width", 1024, "--height", 512, "-o", out)
        assert code == 0
        det = formats.read_detections(out)[0]
        assert det.x + det.bw / 2.0 == pytest.approx(512.0, abs=0.5)
        assert det.y + det.bh / 2.0 == pytest.approx(256.0, abs=0.5)

    def test_seam_split_pair_fused_to_one(self, tmp_path, capsys):
        w = 1000
        dets = [
            ov.Detection(0, 0.9, 990.0, 50.0, 22.0, 10.0),
            ov.Detection(0, 0.8, 0.0, 50.0, 12.0, 10.0),
        ]
        src = tmp_path / "dets.jsonl"
        formats.write_detections(src, dets)
        out = tmp_path / "fused.jsonl"
        code, _, _ = run(capsys, "nms", "--in", src, "--iou-threshold", 0.5,
                         "--width", w, "--height", 500, "-o", out)
        assert code == 0
        assert len(formats.read_detections(out)) == 1

    def test_output_never_exceeds_input(self, tmp_path, capsys):
        rng = np.random.default_rng(81)
        dets = []
        for _ in range(30):
            bw = float(rng.uniform(5, 100))
            dets.append(ov.Detection(int(rng.integers(0, 3)), float(rng.uniform(0.1, 1)),
                                     float(rng.uniform(0, 1000)), float(rng.uniform(0, 400)),
                                     bw, float(rng.uniform(5, 90))))
        src = tmp_path / "dets.jsonl"
        formats.write_detections(src, dets)
        out = tmp_path / "fused.jsonl"
        run(capsys, "nms", "--in", src, "--width", 1000, "--height", 500, "-o", out)
        assert len(formats.read_detections(out)) <= 30

    def test_composed_lift_nms_fuses_multi_viewport_object(self, tmp_path, capsys):
        w, h = 1024, 512
        tess = ov.make_tessellation(240, 24.0, 64)
        tess_path = tmp_path / "tess.json"
        formats.write_tessellation(tess_path, tess)
        # find a direction seen well inside at least 3 viewports
        rng = np.random.default_rng(82)
        target, hits = None, []
        while target is None:
            d = ov.normalize_dir(rng.uniform(-180, 180), rng.uniform(-60, 60))
            hits = ov.viewports_containing(tess, d)
            if len(hits) >= 3:
                uv = [tess.viewports[k].frame.project(d.lon, d.lat) for k in hits]
                if all(abs(u) < 0.7 and abs(v) < 0.7 for u, v, _ in uv):
                    target = d
        vdets = []
        for k in hits:
            vp = tess.viewports[k]
            u, v, _ = vp.frame.project(target.lon, target.lat)
            col = (float(u) + 1.0) * 0.5 * vp.size
            row = (1.0 - float(v)) * 0.5 * vp.size
            vdets.append(ov.ViewportDetection(k, 0, 0.9, col - 4.0, row - 4.0, 8.0, 8.0))
        src = tmp_path / "vdets.jsonl"
        formats.write_detections(src, vdets)
        lifted_path = tmp_path / "lifted.jsonl"
        run(capsys, "lift", "--in", src, "--tessellation", tess_path,
            "--width", w, "--height", h, "-o", lifted_path)
        lifted = formats.read_detections(lifted_path)
        assert len(lifted) == len(hits) >= 3
        for i, a in enumerate(lifted):
            for b in lifted[i + 1:]:
                assert ov.cyclic_iou(a, b, w) > 0.5
        fused_path = tmp_path / "fused.jsonl"
        run(capsys, "nms", "--in", lifted_path, "--iou-threshold", 0.5,
            "--width", w, "--height", h, "-o", fused_path)
        assert len(formats.read_detections(fused_path)) == 1


class TestBlurCommand:
    def pinstripe_png(self, tmp_path):
        plane = np.full((129, 256), 0.2, dtype=np.float32)
        xs = np.arange(256)
        row = np.where((xs // 16) % 2 == 0, 0.2, 0.8).astype(np.float32)
        plane[60:69] = row
        path = tmp_path / "stripes.png"
        formats.write_image(path, ov.EquirectImage(plane))
        return path

    def test_sharp_pinstripe_near_one(self, tmp_path, capsys):
        code, out, _ = run(capsys, "blur", "--image", self.pinstripe_png(tmp_path))
        assert code == 0
        value = float(out.split("global_blur:")[1].splitlines()[0])
        assert value == pytest.approx(1.0, abs=0.2)

    def test_constant_image_reports_na(self, tmp_path, capsys):
        path = tmp_path / "flat.png"
        formats.write_image(path, ov.EquirectImage.full(64, 32, 0.5))
        code, out, _ = run(capsys, "blur", "--image", path)
        assert code == 0
        assert "global_blur: n/a" in out and "edge_count: 0" in out

    def test_compensation_flag_changes_result(self, tmp_path, capsys):
        # stripes drawn 2x wide at lat 60: compensation halves the width
        w, h = 256, 129
        base = np.where((np.arange(w // 2) // 16) % 2 == 0, 0.2, 0.8)
        wide = np.empty(w, dtype=np.float64)
        wide[0::2] = base
        wide[1::2] = (base + np.roll(base, -1)) / 2.0
        plane = np.full((h, w), 0.2, dtype=np.float32)
        lat = 90.0 - (np.arange(h) + 0.5) / h * 180.0
        plane[np.abs(lat - 60.0) < 3.0] = wide.astype(np.float32)
        path = tmp_path / "wide.png"
        formats.write_image(path, ov.EquirectImage(plane))
        _, out_comp, _ = run(capsys, "blur", "--image", path)
        _, out_raw, _ = run(capsys, "blur", "--image", path, "--no-compensate")
        comp = float(out_comp.split("global_blur:")[1].splitlines()[0])
        raw = float(out_raw.split("global_blur:")[1].splitlines()[0])
        assert raw / comp == pytest.approx(2.0, abs=0.2)


class TestCoverageCommand:
    def test_default_tessellation_fully_covers(self, tmp_path, capsys, warm_kernels):
        tess_path = tmp_path / "tess.json"
        run(capsys, "viewports", "--count", 240, "--fov", 24, "--size", 64, "-o", tess_path)
        out = tmp_path / "cov.png"
        code, stdout, _ = run(capsys, "coverage", "--tessellation", tess_path,
                              "--width", 512, "--height", 256, "-o", out)
        assert code == 0
        stats = dict(line.split(": ") for line in stdout.strip().splitlines())
        assert int(stats["min_overlap"]) >= 1
        assert float(stats["coverage_fraction"]) >= 0.999
        assert out.exists()

    def test_single_viewport_outline(self, tmp_path, capsys):
        tess_path = tmp_path / "tess.json"
        run(capsys, "viewports", "--count", 1, "--fov", 24, "--size", 32, "-o", tess_path)
        out = tmp_path / "cov.png"
        code, stdout, _ = run(capsys, "coverage", "--tessellation", tess_path,
                              "--width", 256, "--height", 128, "-o", out)
        assert code == 0
        arr = formats.read_raster(out)[:, :, 0]
        assert int(dict(line.split(": ") for line in stdout.strip().splitlines())["max_overlap"]) == 1
        # footprint interior shaded, border drawn at full white, far field black
        assert arr.max() == 1.0 and arr.min() == 0.0

    def test_deterministic(self, tmp_path, capsys):
        tess_path = tmp_path / "tess.json"
        run(capsys, "viewports", "--count", 6, "--fov", 30, "--size", 16, "-o", tess_path)
        a, b = tmp_path / "a.png", tmp_path / "b.png"
        ca, sa, _ = run(capsys, "coverage", "--tessellation", tess_path,
                        "--width", 128, "--height", 64, "-o", a)
        cb, sb, _ = run(capsys, "coverage", "--tessellation", tess_path,
                        "--width", 128, "--height", 64, "-o", b)
        assert ca == cb == 0 and sa == sb
        assert a.read_bytes() == b.read_bytes()


class TestPrepareCommand:
    def test_downscale_to_receptive_field(self, tmp_path, capsys):
        src = tmp_path / "big.png"
        formats.write_image(src, smooth_sphere_image(768, 384))
        out = tmp_path / "prep.png"
        code, _, _ = run(capsys, "prepare", "--image", src, "--width", 384, "--height", 192,
                         "-o", out)
        assert code == 0
        back = formats.read_image(out)
        assert (back.width, back.height) == (384, 192)

    def test_same_size_pixels_identical(self, tmp_path, capsys):
        src = tmp_path / "img.png"
        formats.write_image(src, smooth_sphere_image(64, 32))
        out = tmp_path / "same.png"
        code, _, _ = run(capsys, "prepare", "--image", src, "--width", 64, "--height", 32,
                         "-o", out)
        assert code == 0
        assert np.array_equal(formats.read_raster(src), formats.read_raster(out))

    def test_bad_aspect_exits_validation(self, tmp_path, capsys):
        src = tmp_path / "img.png"
        formats.write_image(src, smooth_sphere_image(64, 32))
        code, _, err = run(capsys, "prepare", "--image", src, "--width", 65, "--height", 32,
                           "-o", tmp_path / "x.png")
        assert code == 4 and "2:1" in err

    def test_missing_input_exits_io(self, tmp_path, capsys):
        code, _, err = run(capsys, "prepare", "--image", tmp_path / "nope.png",
                           "--width", 64, "--height", 32, "-o", tmp_path / "x.png")
        assert code == 3
