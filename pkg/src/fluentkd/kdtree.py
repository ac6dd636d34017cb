"""Four-dimensional point index with rectangular range queries.

Points are 4-tuples of signed 64-bit integers (symbol hashes, small
cardinals, or time ticks).  Nodes cycle the splitting dimension with depth.
Ordering at a node is by *superkey*: the splitting coordinate first, then
the remaining coordinates cyclically as tie-breaks.  This keeps the tree
balanceable when many points share one coordinate (e.g. every interval of
one fluent hashes identically in dimension 0); points equal to the node in
the splitting coordinate may therefore sit on either side, and queries
descend both sides on equality.

Balance: after every insert or delete, any subtree where a child exceeds
ALPHA times the subtree size is rebuilt by median split (scapegoat style),
so lookups stay O(log n) amortised and range queries O(sqrt(n) + k).

Every node also carries the exact min/max of its subtree in dimension 3
(the time coordinate).  Dimension 3 is the selective one in this workload:
open intervals sit at the +inf sentinel and sliding windows are time
bands, so subtrees whose time bounds miss the query box are pruned without
being visited.
"""

from __future__ import annotations

import sys
from operator import itemgetter

from .terms import NEG_INF, POS_INF

ALPHA = 0.7

Key = tuple  # (c0, c1, c2, c3) of int

# rebuild sort orders: superkey rotation per splitting dimension, applied to
# flat (c0, c1, c2, c3, payload) items so comparisons never touch payloads
_ROT = (itemgetter(0, 1, 2, 3), itemgetter(1, 2, 3, 0),
        itemgetter(2, 3, 0, 1), itemgetter(3, 0, 1, 2))


class KdError(Exception):
    pass


class DuplicateLabel(KdError):
    pass


class UnknownLabel(KdError):
    pass


class SentinelMisuse(KdError):
    pass


class MalformedBox(KdError):
    pass


class _Node:
    __slots__ = ("key", "payload", "left", "right", "size", "min3", "max3")

    def __init__(self, key, payload):
        self.key = key
        self.payload = payload
        self.left = None
        self.right = None
        self.size = 1
        self.min3 = key[3]
        self.max3 = key[3]


def _cmp(a: Key, b: Key, d: int) -> int:
    # superkey comparison starting at dimension d, cycling through the rest
    for i in (d, (d + 1) & 3, (d + 2) & 3, (d + 3) & 3):
        if a[i] < b[i]:
            return -1
        if a[i] > b[i]:
            return 1
    return 0


def _size(n) -> int:
    return n.size if n is not None else 0


class KdTree:
    """One 4-d tree; single writer, no concurrent reads during writes."""

    def __init__(self, label: str = ""):
        self.label = label
        self.root = None
        self.live_count = 0
        self.rebuild_count = 0
        self.visit_count = 0  # cumulative nodes touched by range queries
        self.last_query_visits = 0
        self.mutation_count = 0  # inserts + physical removals

    # -- construction ---------------------------------------------------

    def insert(self, key: Key, payload) -> None:
        key = self._check_key(key)
        self.live_count += 1
        self.mutation_count += 1
        node = self.root
        if node is None:
            self.root = _Node(key, payload)
            return
        k3 = key[3]
        path = []
        depth = 0
        while True:
            path.append(node)
            node.size += 1
            if k3 < node.min3:
                node.min3 = k3
            if k3 > node.max3:
                node.max3 = k3
            d = depth & 3
            kd = key[d]
            nd = node.key[d]
            if kd < nd:
                go_left = True
            elif kd > nd:
                go_left = False
            else:
                go_left = _cmp(key, node.key, d) < 0
            child = node.left if go_left else node.right
            if child is None:
                if go_left:
                    node.left = _Node(key, payload)
                else:
                    node.right = _Node(key, payload)
                break
            node = child
            depth += 1
        # rebuild the topmost subtree violating the alpha rule, if any;
        # that rebalances every violator beneath it as well
        for i, n in enumerate(path):
            if max(_size(n.left), _size(n.right)) > ALPHA * n.size:
                rebuilt = self._rebuild(n, i)
                if i == 0:
                    self.root = rebuilt
                elif path[i - 1].left is n:
                    path[i - 1].left = rebuilt
                else:
                    path[i - 1].right = rebuilt
                break

    def bulk_load(self, items) -> None:
        """Replace contents with a median-split build of (key, payload) pairs."""
        flat = []
        for k, p in items:
            flat.append(self._check_key(k) + (p,))
        self.root = self._build(flat, 0)
        self.live_count = len(flat)
        self.mutation_count += len(flat)

    def _check_key(self, key) -> Key:
        if len(key) != 4:
            raise KdError("keys are 4-dimensional")
        key = tuple(int(c) for c in key)
        for c in key[:3]:
            if c == NEG_INF or c == POS_INF:
                raise SentinelMisuse(f"sentinel in symbol dimension of {key}")
        if key[3] == NEG_INF:
            raise SentinelMisuse("NEG_INF is not a valid time coordinate")
        return key

    # -- balance --------------------------------------------------------

    def _repair(self, node, depth):
        if max(_size(node.left), _size(node.right)) > ALPHA * node.size:
            return self._rebuild(node, depth)
        return node

    def _rebuild(self, node, depth):
        items = []
        self._collect(node, items)
        self.rebuild_count += 1
        return self._build(items, depth)

    def _collect(self, node, out):
        # preorder flat (c0, c1, c2, c3, payload) items; the build re-sorts
        stack = [node]
        while stack:
            n = stack.pop()
            out.append(n.key + (n.payload,))
            if n.left is not None:
                stack.append(n.left)
            if n.right is not None:
                stack.append(n.right)

    def _build(self, items, depth):
        n = len(items)
        if n == 0:
            return None
        if n == 1:
            it = items[0]
            return _Node(it[:4], it[4])
        d = depth & 3
        items.sort(key=_ROT[d])
        mid = n // 2
        it = items[mid]
        node = _Node(it[:4], it[4])
        node.left = self._build(items[:mid], depth + 1)
        node.right = self._build(items[mid + 1:], depth + 1)
        node.size = n
        self._refresh_bounds(node)
        return node

    @staticmethod
    def _refresh_bounds(node) -> None:
        m = M = node.key[3]
        left, right = node.left, node.right
        if left is not None:
            if left.min3 < m:
                m = left.min3
            if left.max3 > M:
                M = left.max3
        if right is not None:
            if right.min3 < m:
                m = right.min3
            if right.max3 > M:
                M = right.max3
        node.min3 = m
        node.max3 = M

    def _fix(self, node) -> None:
        node.size = 1 + _size(node.left) + _size(node.right)
        self._refresh_bounds(node)

    # -- deletion -------------------------------------------------------

    def delete(self, key: Key, payload_predicate=None) -> int:
        """Remove every point with exactly this key whose payload satisfies
        the predicate (all payloads when None).  Returns how many."""
        key = tuple(int(c) for c in key)
        pred = payload_predicate if payload_predicate is not None else (lambda p: True)
        self.root, removed = self._delete(self.root, key, pred, 0)
        self.live_count -= removed
        self.mutation_count += removed
        return removed

    def _delete(self, node, key, pred, depth):
        if node is None:
            return None, 0
        # time-bounds cut: no point with this key can live below
        if key[3] < node.min3 or key[3] > node.max3:
            return node, 0
        d = depth & 3
        c = _cmp(key, node.key, d)
        removed = 0
        if c <= 0:
            node.left, k = self._delete(node.left, key, pred, depth + 1)
            removed += k
        if c >= 0:
            node.right, k = self._delete(node.right, key, pred, depth + 1)
            removed += k
        while node is not None and node.key == key and pred(node.payload):
            node = self._remove_root(node, depth)
            removed += 1
        if node is not None and removed:
            self._fix(node)
            node = self._repair(node, depth)
        return node, removed

    def _remove_root(self, node, depth):
        # standard kd deletion: replace by the superkey-minimum of a subtree
        d = depth & 3
        if node.right is not None:
            kp, node.right = self._extract_min(node.right, d, depth + 1)
            node.key, node.payload = kp
        elif node.left is not None:
            kp, rest = self._extract_min(node.left, d, depth + 1)
            node.key, node.payload = kp
            node.right = rest  # remaining left keys are >= the minimum
            node.left = None
        else:
            return None
        self._fix(node)
        return self._repair(node, depth)

    def _extract_min(self, node, d, depth):
        """Remove and return ((key, payload), new_subtree) for the node with
        the minimal superkey in dimension d."""
        dd = depth & 3
        if dd == d:
            if node.left is not None:
                kp, node.left = self._extract_min(node.left, d, depth + 1)
            else:
                kp = (node.key, node.payload)
                return kp, self._remove_root(node, depth)
        else:
            target = self._find_min(node, d, depth)
            if target is node:
                kp = (node.key, node.payload)
                return kp, self._remove_root(node, depth)
            kp = (target.key, target.payload)
            node, _ = self._remove_identity(node, target, depth)
        self._fix(node)
        return kp, self._repair(node, depth)

    def _find_min(self, node, d, depth):
        dd = depth & 3
        best = node
        if dd == d:
            if node.left is not None:
                m = self._find_min(node.left, d, depth + 1)
                if _cmp(m.key, best.key, d) <= 0:
                    best = m
            return best
        for child in (node.left, node.right):
            if child is not None:
                m = self._find_min(child, d, depth + 1)
                if _cmp(m.key, best.key, d) < 0:
                    best = m
        return best

    def _remove_identity(self, node, target, depth):
        """Remove the exact node object `target` from the subtree under
        `node`; target differs from `node`.  Returns (new_node, found)."""
        if node is target:
            return self._remove_root(node, depth), True
        d = depth & 3
        c = _cmp(target.key, node.key, d)
        found = False
        if c <= 0 and node.left is not None:
            node.left, found = self._remove_identity(node.left, target, depth + 1)
        if not found and c >= 0 and node.right is not None:
            node.right, found = self._remove_identity(node.right, target, depth + 1)
        if found:
            self._fix(node)
            node = self._repair(node, depth)
        return node, found

    # -- queries ---------------------------------------------------------

    def range_query(self, box) -> list:
        """All live (key, payload) pairs inside the closed box, deterministic
        traversal order.  box: 4 pairs (lo, hi); sentinels mean unbounded."""
        (l0, h0), (l1, h1), (l2, h2), (l3, h3) = self._check_box(box)
        out = []
        visits = 0
        root = self.root
        if root is not None and root.max3 >= l3 and root.min3 <= h3:
            # stack entries: (node, split dim, cell bounds for dims 0..2);
            # dim 3 is pruned through the exact per-node min3/max3 instead
            stack = [(root, 0, NEG_INF, POS_INF, NEG_INF, POS_INF,
                      NEG_INF, POS_INF)]
            los = (l0, l1, l2)
            his = (h0, h1, h2)
            append = out.append
            push = stack.append
            pop = stack.pop
            while stack:
                node, d, al, ah, bl, bh, cl, ch = pop()
                visits += 1
                if (l0 <= al and ah <= h0 and l1 <= bl and bh <= h1
                        and l2 <= cl and ch <= h2
                        and l3 <= node.min3 and node.max3 <= h3):
                    # bounding region inside the box: report the whole
                    # subtree without per-dimension re-checks
                    visits += node.size - 1
                    self._report(node, out)
                    continue
                k = node.key
                if (l0 <= k[0] <= h0 and l1 <= k[1] <= h1
                        and l2 <= k[2] <= h2 and l3 <= k[3] <= h3):
                    append((k, node.payload))
                if d == 3:
                    left, right = node.left, node.right
                    if (right is not None and right.max3 >= l3
                            and right.min3 <= h3):
                        push((right, 0, al, ah, bl, bh, cl, ch))
                    if (left is not None and left.max3 >= l3
                            and left.min3 <= h3):
                        push((left, 0, al, ah, bl, bh, cl, ch))
                    continue
                kd = k[d]
                nd = d + 1
                right = node.right
                if (right is not None and kd <= his[d]
                        and right.max3 >= l3 and right.min3 <= h3):
                    if d == 0:
                        push((right, nd, kd, ah, bl, bh, cl, ch))
                    elif d == 1:
                        push((right, nd, al, ah, kd, bh, cl, ch))
                    else:
                        push((right, nd, al, ah, bl, bh, kd, ch))
                left = node.left
                if (left is not None and kd >= los[d]
                        and left.max3 >= l3 and left.min3 <= h3):
                    if d == 0:
                        push((left, nd, al, kd, bl, bh, cl, ch))
                    elif d == 1:
                        push((left, nd, al, ah, bl, kd, cl, ch))
                    else:
                        push((left, nd, al, ah, bl, bh, cl, kd))
        self.visit_count += visits
        self.last_query_visits = visits
        return out

    def _report(self, node, out):
        stack = [node]
        while stack:
            n = stack.pop()
            out.append((n.key, n.payload))
            if n.right is not None:
                stack.append(n.right)
            if n.left is not None:
                stack.append(n.left)

    def _check_box(self, box):
        if len(box) != 4:
            raise MalformedBox("boxes are 4-dimensional")
        checked = []
        for lo, hi in box:
            lo, hi = int(lo), int(hi)
            if lo > hi:
                raise MalformedBox(f"range [{lo}, {hi}] is empty")
            checked.append((lo, hi))
        return checked

    # -- introspection ----------------------------------------------------

    def items(self) -> list:
        out = []
        if self.root is not None:
            self._report(self.root, out)
        return out

    def height(self) -> int:
        h = 0
        stack = [(self.root, 1)] if self.root else []
        while stack:
            n, d = stack.pop()
            h = max(h, d)
            if n.left is not None:
                stack.append((n.left, d + 1))
            if n.right is not None:
                stack.append((n.right, d + 1))
        return h

    def check_invariants(self) -> None:
        """Raise AssertionError if size or bounds bookkeeping, ordering, or
        the alpha balance rule is violated anywhere."""
        total = self._check(self.root, 0)
        assert total == self.live_count, "live_count drift"

    def _check(self, node, depth):
        if node is None:
            return 0
        d = depth & 3
        ls, rs = self._check(node.left, depth + 1), self._check(node.right, depth + 1)
        assert node.size == 1 + ls + rs, "size drift"
        assert max(ls, rs) <= ALPHA * node.size, "alpha balance violated"
        lo = min((c.min3 for c in (node.left, node.right) if c is not None),
                 default=node.key[3])
        hi = max((c.max3 for c in (node.left, node.right) if c is not None),
                 default=node.key[3])
        assert node.min3 == min(lo, node.key[3]), "min3 drift"
        assert node.max3 == max(hi, node.key[3]), "max3 drift"
        if node.left is not None:
            assert _cmp(node.left.key, node.key, d) <= 0, "left ordering"
        if node.right is not None:
            assert _cmp(node.right.key, node.key, d) >= 0, "right ordering"
        return node.size

    def structure_bytes(self, payload_bytes=None) -> int:
        """Explicit size accounting: node objects, key tuples with their
        integers, time bounds, and payloads via the supplied sizer."""
        if self.root is None:
            return sys.getsizeof(self)
        per_payload = payload_bytes if payload_bytes is not None else (lambda p: 0)
        total = sys.getsizeof(self)
        stack = [self.root]
        while stack:
            n = stack.pop()
            total += sys.getsizeof(n) + sys.getsizeof(n.key)
            total += sum(sys.getsizeof(c) for c in n.key)
            total += sys.getsizeof(n.min3) + sys.getsizeof(n.max3)
            total += per_payload(n.payload)
            if n.left is not None:
                stack.append(n.left)
            if n.right is not None:
                stack.append(n.right)
        return total


class Registry:
    """Process-local named trees; each engine owns one registry."""

    def __init__(self):
        self._trees: dict[str, KdTree] = {}

    def create(self, label: str) -> KdTree:
        if label in self._trees:
            raise DuplicateLabel(label)
        t = KdTree(label)
        self._trees[label] = t
        return t

    def destroy(self, label: str) -> None:
        if label not in self._trees:
            raise UnknownLabel(label)
        del self._trees[label]

    def lookup(self, label: str) -> KdTree:
        if label not in self._trees:
            raise UnknownLabel(label)
        return self._trees[label]

    def labels(self) -> list[str]:
        return sorted(self._trees)
