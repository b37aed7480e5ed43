"""Stand-in for the code runner used by the subprocess bridge tests.

Reads one request line and answers according to markers in the code:
  VALUE=<x>     ok with value x
  INFEASIBLE    infeasible_model
  MALFORMED     a line that is not JSON
  SILENT        exit 3 without answering
  SLEEP=<s>     sleep s seconds first
"""
import json
import re
import sys
import time

request = json.loads(sys.stdin.readline())
code = request["code"]

sleep = re.search(r"SLEEP=([0-9.]+)", code)
if sleep:
    time.sleep(float(sleep.group(1)))
if "SILENT" in code:
    sys.exit(3)
if "MALFORMED" in code:
    print("this is not json", flush=True)
    sys.exit(0)
if "INFEASIBLE" in code:
    reply = {"status": "infeasible_model", "value": None, "message": "model is infeasible"}
else:
    value = re.search(r"VALUE=(-?[0-9.eE+-]+)", code)
    if value:
        reply = {"status": "ok", "value": float(value.group(1)),
                 "message": "tag " + request["tag"]}
    else:
        reply = {"status": "runtime_error", "value": None, "message": "NameError: x"}
print(json.dumps(reply), flush=True)
