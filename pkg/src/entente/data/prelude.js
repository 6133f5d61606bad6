/*
 * entente harness prelude, version 1.
 *
 * Prepended to transplanted tests so that suite-specific helper names
 * resolve on every engine. Pure ECMAScript 5: no engine shell built-ins
 * are required, and nothing here prints unless an assertion fails or the
 * test itself calls print().
 *
 * Contract with the outcome classifier: an assertion violation emits one
 * line starting with "ENTENTE_ASSERT_FAIL:" and then throws, so the engine
 * exits nonzero. The sentinel line never appears in a passing run.
 */

var __ententeSentinel = "ENTENTE_ASSERT_FAIL:";

var __ententeEmit = (function () {
  if (typeof print === "function") {
    return print;
  }
  if (typeof console !== "undefined" && console && typeof console.log === "function") {
    return function (s) { console.log(s); };
  }
  return function () {};
})();

var __ententePrintLog = [];

// Alias print() to a buffered logger on engines that lack a shell print.
var print = (typeof print === "function") ? print : function (value) {
  var text = String(value);
  __ententePrintLog.push(text);
  __ententeEmit(text);
};

function __ententeFail(message) {
  var line = __ententeSentinel + " " + message;
  __ententeEmit(line);
  throw new Error(line);
}

function __ententeRepr(value) {
  try {
    if (typeof value === "string") {
      return '"' + value + '"';
    }
    if (value && Object.prototype.toString.call(value) === "[object Array]") {
      var parts = [];
      for (var i = 0; i < value.length; i++) {
        parts.push(__ententeRepr(value[i]));
      }
      return "[" + parts.join(", ") + "]";
    }
    return String(value);
  } catch (e) {
    return "<unprintable>";
  }
}

function __ententeSameValue(a, b) {
  if (a === b) {
    // Distinguish +0 from -0.
    return a !== 0 || 1 / a === 1 / b;
  }
  // NaN equals NaN for assertion purposes.
  return a !== a && b !== b;
}

function __ententeIsArray(value) {
  return Object.prototype.toString.call(value) === "[object Array]";
}

function __ententeArrayEq(a, b) {
  if (a.length !== b.length) {
    return false;
  }
  for (var i = 0; i < a.length; i++) {
    var x = a[i];
    var y = b[i];
    if (__ententeIsArray(x) && __ententeIsArray(y)) {
      if (!__ententeArrayEq(x, y)) {
        return false;
      }
    } else if (!__ententeSameValue(x, y)) {
      return false;
    }
  }
  return true;
}

function assert(condition, message) {
  if (!condition) {
    __ententeFail(message !== undefined ? String(message) : "assertion failed");
  }
}

function assertEq(actual, expected, message) {
  var equal;
  if (__ententeIsArray(actual) && __ententeIsArray(expected)) {
    equal = __ententeArrayEq(actual, expected);
  } else {
    equal = __ententeSameValue(actual, expected);
  }
  if (!equal) {
    __ententeFail(
      (message !== undefined ? String(message) + ": " : "") +
      "expected " + __ententeRepr(expected) + ", got " + __ententeRepr(actual)
    );
  }
}

function assertEqArray(actual, expected, message) {
  if (!__ententeIsArray(actual) || !__ententeIsArray(expected)) {
    __ententeFail("assertEqArray requires arrays");
  }
  if (!__ententeArrayEq(actual, expected)) {
    __ententeFail(
      (message !== undefined ? String(message) + ": " : "") +
      "expected " + __ententeRepr(expected) + ", got " + __ententeRepr(actual)
    );
  }
}

function assertThrowsInstanceOf(fn, ctor, message) {
  var thrown = false;
  var caught;
  try {
    fn();
  } catch (e) {
    thrown = true;
    caught = e;
  }
  if (!thrown) {
    __ententeFail(
      (message !== undefined ? String(message) + ": " : "") + "no exception thrown"
    );
  }
  if (!(caught instanceof ctor)) {
    __ententeFail(
      (message !== undefined ? String(message) + ": " : "") +
      "exception is not an instance of the expected constructor: " + __ententeRepr(caught)
    );
  }
}

// Stubs for non-portable shell helpers. They keep transplanted tests from
// dying on a bare name lookup; tests that need the real semantics should be
// discarded at the manifest level instead.
function drainMicrotasks() {}

function getPromiseResult(promise) {
  return undefined;
}
