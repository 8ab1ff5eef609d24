"""A guided tour of loop tracing on tiny trees.

Links live on the edges of a rooted tree, each carrying a time in the
circle [0,1).  A cross sends the trajectory to the opposite endpoint
keeping its time direction; a double bar sends it across and reverses
the direction.  Following those rules from any starting point closes a
loop, and the loops partition vertices x time exactly.
"""

from treeloops import (
    LinkKind,
    LoopPoint,
    all_loops,
    config_from_lists,
    dump_loops,
    generate_regular,
    sample_links,
    trace_loop,
)

star = generate_regular(3, 1)  # a root with three leaves

print("== no links: each vertex is its own unit-circle loop")
empty = config_from_lists(star.vertex_count, beta=1.0, u=1.0, per_edge={})
loop = trace_loop(star, empty, LoopPoint(vertex=0, time=0.0))
print(f"   root loop length = {loop.length}, visits {sorted(loop.visited_vertices)}")

print("== one cross merges the two endpoint circles into one loop of length 2")
one = config_from_lists(star.vertex_count, 1.0, 1.0, {1: [(0.4, LinkKind.CROSS)]})
loop = trace_loop(star, one, LoopPoint(0, 0.0))
print(f"   length = {loop.length}, visits {sorted(loop.visited_vertices)}")

print("== a second cross splits it again: two loops of length 1")
two = config_from_lists(star.vertex_count, 1.0, 1.0, {1: [(0.3, LinkKind.CROSS), (0.7, LinkKind.CROSS)]})
for start in (LoopPoint(0, 0.0), LoopPoint(1, 0.0)):
    loop = trace_loop(star, two, start)
    segs = [(s.vertex, round(s.t_from, 2), round(s.t_to, 2)) for s in loop.segments]
    print(f"   from {start.vertex}: length = {loop.length}, segments = {segs}")

print("== a double bar also merges, but the far circle is traversed backwards")
bar = config_from_lists(star.vertex_count, 1.0, 0.0, {1: [(0.4, LinkKind.BAR)]})
loop = trace_loop(star, bar, LoopPoint(0, 0.0))
for s in loop.segments:
    arrow = "up" if s.direction > 0 else "down"
    print(f"   vertex {s.vertex}: {s.t_from:.2f} -> {s.t_to:.2f} ({arrow}, length {s.length:.2f})")

print("== loops partition V x [0,1): lengths always sum to the vertex count")
tree = generate_regular(3, 4)
config = sample_links(tree, beta=0.8, u=0.5, seed=42)
loops = all_loops(tree, config)
total = sum(lp.length for lp in loops)
print(f"   {len(loops)} loops on {tree.vertex_count} vertices, total length = {total:.12f}")
print()
print(dump_loops(loops[:2]))
