"""FastAPI service wrapping the synthesis pipeline.

Pipeline endpoints are stateless (artifacts in, artifacts out); sessions
host live controller instances for step-by-step interaction.  Domain
outcomes (unrealizable spec, invalid adaptive constraint, infeasible
choice) map to 409; malformed input maps to 400.
"""

from __future__ import annotations

import threading
import uuid

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..abstraction import (booleanize, bspec_from_text, bspec_to_text,
                           choice_bits, table_from_text, table_to_text)
from ..bench import (bench_compare, build_pipeline, gen_inputs,
                     make_provider, syn_spec)
from ..errors import (AdaptiveInvalid, ChoiceNotInReaction, ExtraViolation,
                      FormulaNotValid, FragmentError, InfeasibleChoice,
                      MultiRegion, NoRegion, RealNotEmittable, SynthError,
                      UnsupportedFragment)
from ..games import (Unrealizable, build_game, export_mealy, import_mealy,
                     import_mealy_for_table, solve_and_extract)
from ..parsing import frac_from_json, frac_to_json
from ..providers import (emit_source, machine_pairs, parse_gamma,
                         provider_from_text, provider_to_text,
                         synthesize_static_provider)
from ..runtime import (check_trace, init_controller, parse_input_trace,
                       parse_output_trace, render_output_trace, run_trace)
from ..solver import skolem_from_json
from ..specs import parse_spec
from . import schemas as S

DOMAIN_ERRORS = (FormulaNotValid, AdaptiveInvalid, InfeasibleChoice,
                 FragmentError, NoRegion, MultiRegion, ExtraViolation,
                 ChoiceNotInReaction, UnsupportedFragment, RealNotEmittable)


def _fail(component: str, exc: Exception, witness: list[str] | None = None):
    body = S.ErrorBody(component=component, kind=type(exc).__name__,
                       message=str(exc), witness=witness).model_dump()
    status = 409 if isinstance(exc, DOMAIN_ERRORS) else 400
    return HTTPException(status_code=status, detail=body)


def create_app() -> FastAPI:
    app = FastAPI(title="synthmt", version=__version__,
                  description="Static synthesis of theory-level reactive "
                              "controllers over linear arithmetic")
    sessions: dict[str, dict] = {}
    sessions_lock = threading.Lock()

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__}

    @app.post("/abstract", response_model=S.AbstractResponse)
    def abstract(req: S.AbstractRequest) -> S.AbstractResponse:
        try:
            spec = parse_spec(req.spec)
            bspec = booleanize(spec)
        except SynthError as exc:
            raise _fail("abstract", exc)
        from ..parsing import render_atom
        return S.AbstractResponse(
            table=table_to_text(bspec.table),
            boolean_spec=bspec_to_text(bspec),
            letters=list(bspec.letters),
            literals=[render_atom(a) for a in spec.literals])

    @app.post("/synth", response_model=S.SynthResponse)
    def synth(req: S.SynthRequest) -> S.SynthResponse:
        try:
            bspec = bspec_from_text(req.boolean_spec)
            if req.import_mealy is not None:
                machine = import_mealy(req.import_mealy, bspec)
                return S.SynthResponse(mealy=export_mealy(machine),
                                       states=len(machine.states),
                                       imported=True)
            result = solve_and_extract(build_game(bspec))
        except SynthError as exc:
            raise _fail("synth", exc)
        if isinstance(result, Unrealizable):
            raise HTTPException(status_code=409, detail=S.ErrorBody(
                component="synth", kind="Unrealizable",
                message="specification is unrealizable",
                witness=list(result.witness)).model_dump())
        return S.SynthResponse(mealy=export_mealy(result),
                               states=len(result.states), imported=False)

    @app.post("/skolem", response_model=S.SkolemResponse)
    def skolem(req: S.SkolemRequest) -> S.SkolemResponse:
        try:
            if req.table is not None:
                table = table_from_text(req.table)
            elif req.boolean_spec is not None:
                table = bspec_from_text(req.boolean_spec).table
            else:
                raise SynthError("skolem needs a table or boolean-spec artifact")
            machine = import_mealy_for_table(req.mealy, table)
            gamma = parse_gamma(req.gamma, table) if req.gamma else None
            pairs = None if req.all_pairs else machine_pairs(machine)
            provider = synthesize_static_provider(table, pairs,
                                                  gamma=gamma, lazy=False)
        except SynthError as exc:
            raise _fail("skolem", exc)
        return S.SkolemResponse(provider=provider_to_text(provider),
                                pairs=len(provider.pairs()))

    @app.post("/emit-c", response_model=S.EmitCResponse)
    def emit_c(req: S.EmitCRequest) -> S.EmitCResponse:
        import json as _json
        try:
            data = _json.loads(req.provider)
            chunks, names = [], []
            for item in data["pairs"]:
                fn = skolem_from_json(item["function"])
                fname = f"{req.name}_{item['letter']}_c{item['choice']}"
                chunks.append(emit_source(fn, fname))
                names.extend(f"{fname}_{out}" for out, _ in fn.outputs)
        except (KeyError, ValueError, TypeError) as exc:
            raise _fail("emit-c", SynthError(f"malformed provider: {exc}"))
        except SynthError as exc:
            raise _fail("emit-c", exc)
        header = "#include <stdint.h>"
        body = "\n".join(c.replace(header, "").lstrip("\n") for c in chunks)
        return S.EmitCResponse(source=header + "\n\n" + body,
                               functions=names)

    @app.post("/run", response_model=S.RunResponse)
    def run(req: S.RunRequest) -> S.RunResponse:
        try:
            bspec, machine = build_pipeline(req.spec, req.mealy)
            if req.provider_artifact is not None:
                gamma = parse_gamma(req.gamma, bspec.table) if req.gamma else None
                provider = provider_from_text(req.provider_artifact,
                                              bspec.table, gamma)
            else:
                provider = make_provider(bspec, machine, req.provider,
                                         req.gamma, seed=req.seed,
                                         randomized=req.randomized)
            inputs = parse_input_trace(req.inputs)
            ctl = init_controller(bspec, machine, provider)
            records = run_trace(ctl, inputs)
            report = check_trace(bspec.spec, records)
        except SynthError as exc:
            raise _fail("run", exc)
        return S.RunResponse(outputs=render_output_trace(records),
                             report=S.ReportModel(**report.to_json()))

    @app.post("/check", response_model=S.CheckResponse)
    def check(req: S.CheckRequest) -> S.CheckResponse:
        try:
            spec = parse_spec(req.spec)
            records = parse_output_trace(req.trace, spec)
            report = check_trace(spec, records)
        except SynthError as exc:
            raise _fail("check", exc)
        return S.CheckResponse(report=S.ReportModel(**report.to_json()))

    @app.post("/bench", response_model=S.BenchResponse)
    def bench(req: S.BenchRequest) -> S.BenchResponse:
        try:
            if req.spec is not None:
                spec_text = req.spec
            elif req.syn_literals is not None:
                spec_text = syn_spec(req.syn_literals, req.theory)
            else:
                raise SynthError("bench needs a spec or a syn template size")
            if req.inputs is not None:
                inputs = parse_input_trace(req.inputs)
            else:
                inputs = gen_inputs(spec_text, req.steps, req.seed)
            static_rep, dyn_rep, csv = bench_compare(
                spec_text, inputs, req.repeats, req.seed,
                gamma_text=req.gamma, static_kind=req.provider,
                mealy_text=req.import_mealy)
        except SynthError as exc:
            raise _fail("bench", exc)
        ratio = (dyn_rep.provider.mean_us / static_rep.provider.mean_us
                 if static_rep.provider.mean_us > 0 else 0.0)
        return S.BenchResponse(
            static=S.BenchReportModel(**static_rep.to_json()),
            dynamic=S.BenchReportModel(**dyn_rep.to_json()),
            csv=csv, ratio_static_over_dynamic=ratio)

    # ------------------------------------------------------------------
    # Controller sessions

    @app.post("/sessions", response_model=S.SessionCreateResponse)
    def create_session(req: S.SessionCreateRequest) -> S.SessionCreateResponse:
        try:
            bspec, machine = build_pipeline(req.spec, req.mealy)
            if req.provider_artifact is not None:
                gamma = parse_gamma(req.gamma, bspec.table) if req.gamma else None
                provider = provider_from_text(req.provider_artifact,
                                              bspec.table, gamma)
            else:
                provider = make_provider(bspec, machine, req.provider,
                                         req.gamma, seed=req.seed,
                                         randomized=req.randomized)
            defaults = {k: frac_from_json(v)
                        for k, v in req.z_defaults.items()}
            ctl = init_controller(bspec, machine, provider, defaults)
        except SynthError as exc:
            raise _fail("session", exc)
        sid = uuid.uuid4().hex[:12]
        with sessions_lock:
            sessions[sid] = {"ctl": ctl, "lock": threading.Lock(),
                             "kind": req.provider}
        return S.SessionCreateResponse(session_id=sid,
                                       letters=list(bspec.letters),
                                       state=ctl.state)

    def _session(sid: str) -> dict:
        with sessions_lock:
            entry = sessions.get(sid)
        if entry is None:
            raise HTTPException(status_code=404, detail={
                "component": "session", "kind": "NotFound",
                "message": f"no session {sid!r}"})
        return entry

    @app.post("/sessions/{sid}/step", response_model=S.SessionStepResponse)
    def session_step(sid: str, req: S.SessionStepRequest
                     ) -> S.SessionStepResponse:
        entry = _session(sid)
        ctl = entry["ctl"]
        try:
            v_x = {k: frac_from_json(v) for k, v in req.x.items()}
            v_z = {k: frac_from_json(v) for k, v in (req.z or {}).items()}
            with entry["lock"]:
                y, rec = ctl.step(v_x, v_z or None)
        except SynthError as exc:
            raise _fail("session", exc)
        return S.SessionStepResponse(
            index=rec.index, letter=rec.letter,
            choice=choice_bits(rec.choice),
            y={k: frac_to_json(v) for k, v in y.items()},
            state=ctl.state, partition_us=rec.partition_us,
            machine_us=rec.machine_us, provide_us=rec.provide_us)

    @app.get("/sessions/{sid}", response_model=S.SessionInfoResponse)
    def session_info(sid: str) -> S.SessionInfoResponse:
        entry = _session(sid)
        ctl = entry["ctl"]
        return S.SessionInfoResponse(session_id=sid, steps=ctl.index,
                                     state=ctl.state,
                                     provider_kind=entry["kind"])

    @app.delete("/sessions/{sid}")
    def session_delete(sid: str) -> dict:
        with sessions_lock:
            if sid not in sessions:
                raise HTTPException(status_code=404, detail={
                    "component": "session", "kind": "NotFound",
                    "message": f"no session {sid!r}"})
            del sessions[sid]
        return {"deleted": sid}

    return app


app = create_app()
