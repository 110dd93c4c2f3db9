"""Execution server. Reads one JSON request per line on stdin and answers
with one JSON line on stdout. User code only ever runs in forked children."""

import builtins
import copy
import importlib.abc
import importlib.machinery
import inspect
import io
import json
import math
import os
import select
import signal
import sys
import time
import traceback
import types
import unittest

STMT_FILE = "<ampforge-stmt>"
MAX_ITEMS = 64
_real = {}


def realpath(p):
    r = _real.get(p)
    if r is None:
        r = os.path.realpath(p) if not p.startswith("<") else p
        _real[p] = r
    return r


def clean(s):
    return s.encode("utf-8", "replace").decode("utf-8")


def fmt_exc(e):
    return clean("".join(traceback.format_exception(type(e), e, e.__traceback__))[-4000:])


# ---------------------------------------------------------------- children


def run_jobs(jobs, parallel, timeout):
    """Runs each zero-arg callable in its own fork. Returns one dict per job:
    {"ok": True, "result": ...} | {"ok": False, "error": ...} | {"timeout": True}."""
    results = [None] * len(jobs)
    pending = list(range(len(jobs)))
    running = {}
    while pending or running:
        while pending and len(running) < max(1, parallel):
            i = pending.pop(0)
            r, w = os.pipe()
            sys.stdout.flush()
            pid = os.fork()
            if pid == 0:
                os.close(r)
                child(jobs[i], w)
            os.close(w)
            running[r] = (i, pid, time.monotonic() + timeout, [])
        now = time.monotonic()
        wait = max(0.0, min(v[2] for v in running.values()) - now)
        ready, _, _ = select.select(list(running), [], [], wait)
        for r in ready:
            i, pid, deadline, chunks = running[r]
            data = os.read(r, 1 << 16)
            if data:
                chunks.append(data)
                continue
            os.close(r)
            del running[r]
            os.waitpid(pid, 0)
            if chunks:
                results[i] = json.loads(b"".join(chunks).decode("utf-8"))
            else:
                results[i] = {"ok": False, "error": "child exited without a result"}
        now = time.monotonic()
        for r in [r for r, v in running.items() if v[2] <= now]:
            i, pid, _, _ = running.pop(r)
            try:
                os.kill(pid, signal.SIGKILL)
            except ProcessLookupError:
                pass
            os.waitpid(pid, 0)
            os.close(r)
            results[i] = {"ok": False, "timeout": True}
    return results


def child(job, w):
    try:
        null = os.open(os.devnull, os.O_RDWR)
        for fd in (0, 1, 2):
            os.dup2(null, fd)
        sys.stdout = io.TextIOWrapper(os.fdopen(1, "wb", closefd=False))
        sys.stderr = io.TextIOWrapper(os.fdopen(2, "wb", closefd=False))
        # a generator inherited through fork would repeat across runs
        if "random" in sys.modules:
            sys.modules["random"].seed()
        try:
            out = {"ok": True, "result": job()}
        except BaseException as e:
            out = {"ok": False, "error": fmt_exc(e)}
        data = json.dumps(out).encode("utf-8")
    except BaseException as e:
        data = json.dumps({"ok": False, "error": repr(e)}).encode("utf-8")
    view = memoryview(data)
    while view:
        n = os.write(w, view)
        view = view[n:]
    os._exit(0)


# ---------------------------------------------------------------- loading


class MutantLoader(importlib.machinery.SourceFileLoader):
    def __init__(self, fullname, path, source):
        super().__init__(fullname, path)
        self._source = source

    def get_code(self, fullname):
        return compile(self._source, self.path, "exec", dont_inherit=True)


class MutantFinder(importlib.abc.MetaPathFinder):
    def __init__(self, path, source):
        self.path = realpath(path)
        self.source = source

    def find_spec(self, fullname, path, target=None):
        spec = importlib.machinery.PathFinder.find_spec(fullname, path)
        if spec is not None and spec.origin and realpath(spec.origin) == self.path:
            spec.loader = MutantLoader(fullname, spec.origin, self.source)
            return spec
        return None


def load(ctx, mutant=None):
    for p in reversed([ctx["test_dir"], ctx["project_root"]]):
        if p in sys.path:
            sys.path.remove(p)
        sys.path.insert(0, p)
    if mutant is not None:
        sys.meta_path.insert(0, MutantFinder(mutant["path"], mutant["source"]))
    mod = types.ModuleType(ctx["module_name"])
    mod.__file__ = ctx["test_path"]
    sys.modules[ctx["module_name"]] = mod
    exec(compile(ctx["source"], ctx["test_path"], "exec", dont_inherit=True), mod.__dict__)
    return mod


def mut_set(ctx):
    return {realpath(p) for p in ctx["mut_files"]}


def line_tracer(files, hits):
    def local(frame, event, arg):
        if event == "line":
            hits.add((frame.f_code.co_filename, frame.f_lineno))
        return local

    def glob(frame, event, arg):
        if realpath(frame.f_code.co_filename) in files:
            return local
        return None

    return glob


def outcome(res):
    if res.failures or res.errors or res.unexpectedSuccesses:
        bad = (res.failures + res.errors)[:1]
        detail = clean(bad[0][1][-2000:]) if bad else "unexpected success"
        return "fail", detail
    if res.skipped and not res.testsRun - len(res.skipped):
        return "skip", None
    return "pass", None


# ---------------------------------------------------------------- run


def op_run(req):
    ctx = req["ctx"]

    def job():
        mod = load(ctx)
        cls = getattr(mod, req["class"])
        files = mut_set(ctx)
        out = {}
        for name in req["methods"]:
            hits = set()
            res = unittest.TestResult()
            t0 = time.perf_counter()
            if req.get("coverage"):
                sys.settrace(line_tracer(files, hits))
            try:
                unittest.TestSuite([cls(name)]).run(res)
            finally:
                sys.settrace(None)
            status, detail = outcome(res)
            out[name] = {
                "status": status,
                "detail": detail,
                "seconds": time.perf_counter() - t0,
                "lines": sorted([realpath(f), l] for f, l in hits),
            }
        return out

    [r] = run_jobs([job], 1, req["timeout"])
    return r


def op_run_mutants(req):
    ctx = req["ctx"]
    statuses = {}
    jobs = []
    ids = []
    for m in req["mutants"]:
        try:
            compile(m["source"], m["path"], "exec", dont_inherit=True)
        except (SyntaxError, ValueError):
            statuses[m["id"]] = "invalid"
            continue

        def job(m=m):
            try:
                mod = load(ctx, m)
                cls = getattr(mod, req["class"])
            except BaseException:
                return "killed"
            res = unittest.TestResult()
            res.failfast = True
            unittest.TestSuite([cls(n) for n in req["methods"]]).run(res)
            return "killed" if res.failures or res.errors or res.unexpectedSuccesses else "survived"

        jobs.append(job)
        ids.append(m["id"])
    for mid, r in zip(ids, run_jobs(jobs, req.get("parallel", 1), req["timeout"])):
        if r.get("timeout"):
            statuses[mid] = "timeout"
        elif r["ok"]:
            statuses[mid] = r["result"]
        else:
            statuses[mid] = "killed"
    return {"ok": True, "result": statuses}


# ---------------------------------------------------------------- snapshots


def qualified(t):
    return "%s.%s" % (t.__module__, t.__qualname__)


class Namer:
    """Finds an expression naming a type from the test module's scope."""

    def __init__(self, mod, files):
        self.scope = dict(mod.__dict__)
        self.files = files
        self.cache = {}

    def expr(self, t):
        if t in self.cache:
            return self.cache[t]
        found = None
        if self.scope.get(t.__name__) is t:
            found = t.__name__
        if found is None:
            for k, v in sorted(self.scope.items()):
                if v is t:
                    found = k
                    break
        if found is None:
            for k, v in sorted(self.scope.items()):
                if isinstance(v, types.ModuleType) and getattr(v, t.__name__, None) is t:
                    found = "%s.%s" % (k, t.__name__)
                    break
        if found is None and getattr(builtins, t.__name__, None) is t:
            found = t.__name__
        self.cache[t] = found
        return found

    def in_mut(self, t):
        m = sys.modules.get(t.__module__)
        f = getattr(m, "__file__", None)
        return bool(f) and realpath(f) in self.files

    def info(self, t):
        base = None
        for b in t.__mro__[1:]:
            if b is object:
                break
            e = self.expr(b)
            if e is not None:
                base = e
                break
        return {
            "name": qualified(t),
            "expr": self.expr(t),
            "base_expr": base,
            "in_mut": self.in_mut(t),
        }


def literal(v, depth=0):
    t = type(v)
    if v is None:
        return {"k": "none"}
    if t is bool:
        return {"k": "bool", "v": v}
    if t is int:
        return {"k": "int", "v": str(v)}
    if t is float:
        return {"k": "float", "v": repr(v)} if math.isfinite(v) else None
    if t is str:
        try:
            v.encode("utf-8")
        except UnicodeEncodeError:
            return None
        return {"k": "str", "v": v}
    if depth > 3:
        return None
    if t in (list, tuple, set, frozenset):
        if len(v) > MAX_ITEMS:
            return None
        items = [literal(x, depth + 1) for x in v]
        if any(i is None for i in items):
            return None
        if t in (set, frozenset):
            items.sort(key=lambda i: json.dumps(i, sort_keys=True))
        return {"k": t.__name__, "items": items}
    if t is dict:
        if len(v) > MAX_ITEMS:
            return None
        pairs = [[literal(a, depth + 1), literal(b, depth + 1)] for a, b in v.items()]
        if any(a is None or b is None for a, b in pairs):
            return None
        return {"k": "dict", "items": pairs}
    return None


def fingerprint(v, depth=4, seen=None):
    if seen is None:
        seen = set()
    if v is None or isinstance(v, (bool, int, float, str, bytes)):
        return repr(v)
    if id(v) in seen or depth == 0:
        return "<%s>" % type(v).__name__
    seen = seen | {id(v)}
    if isinstance(v, (list, tuple)):
        return [fingerprint(x, depth - 1, seen) for x in v]
    if isinstance(v, (set, frozenset)):
        return sorted(repr(fingerprint(x, depth - 1, seen)) for x in v)
    if isinstance(v, dict):
        return [[fingerprint(a, depth - 1, seen), fingerprint(b, depth - 1, seen)] for a, b in v.items()]
    d = getattr(v, "__dict__", None)
    if isinstance(d, dict):
        return [type(v).__name__] + sorted([k, fingerprint(x, depth - 1, seen)] for k, x in d.items())
    slots = [s for c in type(v).__mro__ for s in getattr(c, "__slots__", ())]
    if slots:
        return [type(v).__name__] + [[s, fingerprint(getattr(v, s, None), depth - 1, seen)] for s in slots]
    return "%s@%d" % (type(v).__name__, id(v))


def zero_arg(bound):
    try:
        sig = inspect.signature(bound)
    except (TypeError, ValueError):
        return False
    for p in sig.parameters.values():
        if p.kind in (p.POSITIONAL_ONLY, p.POSITIONAL_OR_KEYWORD, p.KEYWORD_ONLY) and p.default is p.empty:
            return False
    return True


def exc_info(namer, e):
    return namer.info(type(e))


def snapshot(namer, v, depth):
    lit = literal(v)
    if lit is not None:
        return lit
    t = type(v)
    info = namer.info(t)
    if t.__module__ == "builtins":
        return {"k": "opaque", "type": info}
    if depth >= 1:
        return {"k": "object", "type": info, "members": None}
    return {"k": "object", "type": info, "members": members(namer, v)}


def members(namer, obj):
    try:
        clone = copy.deepcopy(obj)
    except BaseException:
        clone = None
    out = []
    for name in sorted(dir(obj)):
        if name.startswith("_"):
            continue
        static = inspect.getattr_static(obj, name, None)
        if isinstance(static, (types.FunctionType, staticmethod, classmethod)) or inspect.ismethoddescriptor(static):
            if clone is None or not isinstance(static, types.FunctionType):
                continue
            try:
                bound = getattr(clone, name)
            except BaseException:
                continue
            if not inspect.ismethod(bound) or bound.__self__ is not clone or not zero_arg(bound):
                continue
            before = fingerprint(clone)
            try:
                value = bound()
            except BaseException as e:
                value = e
                raised = True
            else:
                raised = False
            if fingerprint(clone) != before:
                try:
                    clone = copy.deepcopy(obj)
                except BaseException:
                    clone = None
                continue
            if raised:
                out.append({"name": name, "call": True, "snap": {"k": "raises", "type": exc_info(namer, value)}})
            else:
                out.append({"name": name, "call": True, "snap": snapshot(namer, value, 1)})
            continue
        holder = clone if (clone is not None and isinstance(static, property)) else obj
        try:
            value = getattr(holder, name)
        except BaseException as e:
            out.append({"name": name, "call": False, "snap": {"k": "raises", "type": exc_info(namer, e)}})
            continue
        if callable(value) and not isinstance(value, (bool, int, float, str)):
            continue
        out.append({"name": name, "call": False, "snap": snapshot(namer, value, 1)})
    return out


# ---------------------------------------------------------------- observe


def op_observe(req):
    ctx = req["ctx"]

    def job():
        mod = load(ctx)
        cls = getattr(mod, req["class"])
        files = mut_set(ctx)
        namer = Namer(mod, files)
        compiled = []
        for st in req["statements"]:
            code = compile(st["src"], STMT_FILE, "eval" if st["mode"] == "expr" else "exec", dont_inherit=True)
            refs = [(r, compile(r, STMT_FILE, "eval", dont_inherit=True)) for r in st["refs"]]
            target = compile(st["target"], STMT_FILE, "eval", dont_inherit=True) if st.get("target") else None
            compiled.append((st, code, refs, target))
        cls.setUpClass()
        inst = cls("runTest")
        inst.setUp()
        ns = dict(mod.__dict__)
        ns["self"] = inst
        lines = []
        raised = None
        hit = [False]

        def tracer(frame, event, arg):
            if event == "call":
                back = frame.f_back
                if back is not None and back.f_code.co_filename == STMT_FILE and realpath(frame.f_code.co_filename) in files:
                    hit[0] = True
            return None

        for i, (st, code, refs, target) in enumerate(compiled):
            rec = {"index": i, "mut_call": False, "ret": None, "exc": None, "states": {}}
            hit[0] = False
            value = None
            sys.settrace(tracer)
            try:
                if st["mode"] == "expr":
                    value = eval(code, ns)
                else:
                    exec(code, ns)
                    if target is not None:
                        value = eval(target, ns)
            except BaseException as e:
                sys.settrace(None)
                if not st["wrapped"]:
                    raised = {"index": i, "type": exc_info(namer, e), "detail": clean(repr(e))[:500]}
                    break
                rec["exc"] = exc_info(namer, e)
            finally:
                sys.settrace(None)
            rec["mut_call"] = hit[0]
            if hit[0] and rec["exc"] is None and (st["mode"] == "expr" or target is not None):
                rec["ret"] = snapshot(namer, value, 1)
            for src, rcode in refs:
                try:
                    v = eval(rcode, ns)
                except BaseException:
                    continue
                if namer.in_mut(type(v)):
                    rec["states"][src] = snapshot(namer, v, 0)
            lines.append(rec)
        try:
            inst.tearDown()
            cls.tearDownClass()
        except BaseException as e:
            return {"lines": lines, "raised": raised, "teardown_error": fmt_exc(e)}
        return {"lines": lines, "raised": raised, "teardown_error": None}

    [r] = run_jobs([job], 1, req["timeout"])
    return r


# ---------------------------------------------------------------- profile


def arity(fn):
    try:
        sig = inspect.signature(fn)
    except (TypeError, ValueError):
        return None
    params = list(sig.parameters.values())
    if params and params[0].name in ("self", "cls"):
        params = params[1:]
    if any(p.kind == p.KEYWORD_ONLY and p.default is p.empty for p in params):
        return None
    required = [p for p in params if p.kind in (p.POSITIONAL_ONLY, p.POSITIONAL_OR_KEYWORD) and p.default is p.empty]
    return len(required)


def op_profile(req):
    ctx = req["ctx"]

    def job():
        mod = load(ctx)
        cls = getattr(mod, req["class"])
        files = mut_set(ctx)
        namer = Namer(mod, files)
        test_file = realpath(ctx["test_path"])
        method = getattr(cls, req["method"])
        method_code = getattr(method, "__code__", None)
        arg_types = {}
        pool = {}
        var_types = {}
        functions = {}
        receivers = {}

        def note(value, sink):
            t = type(value)
            name = qualified(t)
            sink.add(name)
            entry = pool.setdefault(name, [])
            lit = literal(value)
            if lit is not None and lit["k"] in ("none", "bool", "int", "float", "str") and lit not in entry:
                entry.append(lit)

        def tracer(frame, event, arg):
            code = frame.f_code
            if event == "call" and realpath(code.co_filename) in files:
                back = frame.f_back
                if back is not None and realpath(back.f_code.co_filename) == test_file:
                    names = code.co_varnames[: code.co_argcount]
                    start = 1 if names and names[0] in ("self", "cls") else 0
                    if start:
                        first = frame.f_locals.get(names[0])
                        qual = "%s.%s" % (qualified(first if isinstance(first, type) else type(first)), code.co_name)
                    else:
                        qual = "%s.%s" % (frame.f_globals.get("__name__", "?"), code.co_name)
                    for pos, pname in enumerate(names[start:]):
                        note(frame.f_locals.get(pname), arg_types.setdefault("%s#%d" % (qual, pos), set()))
                    if not start:
                        fn = frame.f_globals.get(code.co_name)
                        if getattr(fn, "__code__", None) is code:
                            functions[qual] = fn
                return None
            if code is method_code:
                def local(frame, event, arg):
                    if event == "return":
                        for k, v in frame.f_locals.items():
                            if k != "self":
                                note(v, var_types.setdefault(k, set()))
                                if namer.in_mut(type(v)):
                                    receivers[k] = type(v)
                        inst = frame.f_locals.get("self")
                        for k, v in sorted(vars(inst).items()) if inst is not None else []:
                            if not k.startswith("_"):
                                note(v, var_types.setdefault("self." + k, set()))
                                if namer.in_mut(type(v)):
                                    receivers["self." + k] = type(v)
                    return local
                return local
            return None

        res = unittest.TestResult()
        sys.settrace(tracer)
        try:
            unittest.TestSuite([cls(req["method"])]).run(res)
        finally:
            sys.settrace(None)
        status, detail = outcome(res)

        callables = []
        seen_types = {}
        for var, t in receivers.items():
            seen_types[qualified(t)] = t
        for tname, t in sorted(seen_types.items()):
            for name in sorted(dir(t)):
                if name.startswith("_"):
                    continue
                static = inspect.getattr_static(t, name, None)
                if not isinstance(static, types.FunctionType):
                    continue
                n = arity(static)
                if n is None:
                    continue
                callables.append({"owner": tname, "name": name, "qualname": "%s.%s" % (tname, name), "arity": n, "expr": None})
        for qual, fn in sorted(functions.items()):
            n = arity(fn)
            expr = None
            for k, v in sorted(namer.scope.items()):
                if v is fn:
                    expr = k
                    break
            if n is not None and expr is not None:
                callables.append({"owner": None, "name": fn.__name__, "qualname": qual, "arity": n, "expr": expr})
        for types_ in list(arg_types.values()) + list(var_types.values()):
            for t in types_:
                pool.setdefault(t, [])
        return {
            "status": status,
            "detail": detail,
            "arg_types": {k: sorted(v) for k, v in arg_types.items()},
            "var_types": {k: sorted(v) for k, v in var_types.items()},
            "value_pool": pool,
            "receivers": {k: qualified(t) for k, t in receivers.items()},
            "callables": callables,
        }

    [r] = run_jobs([job], 1, req["timeout"])
    return r


OPS = {"run": op_run, "run_mutants": op_run_mutants, "observe": op_observe, "profile": op_profile}


def main():
    out = sys.stdout
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        req = json.loads(line)
        op = req.get("op")
        try:
            if op == "ping":
                resp = {"ok": True, "result": {"python": sys.version.split()[0]}}
            else:
                resp = OPS[op](req)
        except BaseException as e:
            resp = {"ok": False, "error": fmt_exc(e)}
        resp["id"] = req.get("id")
        out.write(json.dumps(resp) + "\n")
        out.flush()


if __name__ == "__main__":
    main()
