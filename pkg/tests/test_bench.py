from genopriv import bench


def test_rflp_bytes_are_deterministic():
    a = bench.bench_rflp(markers=(25,), repeat=1, seed=0)
    b = bench.bench_rflp(markers=(25,), repeat=1, seed=1)
    assert [(r.payload_bytes, r.frame_bytes) for r in a] == [(r.payload_bytes, r.frame_bytes) for r in b]
    assert [r.payload_bytes for r in a] == [3328, 3828]
    assert a[0].reference_online_ms == 3.4
    table = bench.format_table(a)
    assert "25 markers" in table and "3328 B" in table


def test_streamed_tags_use_less_memory():
    streamed, collected = bench.bench_tags(n=2000)
    assert streamed.payload_bytes == collected.payload_bytes == 6 + 2000 * 20
    peak = lambda r: int(r.row.split("heap ")[1].split(" B")[0])  # noqa: E731
    assert peak(streamed) * 10 < peak(collected)
