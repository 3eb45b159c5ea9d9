//! Synthetic labelled corpus built from script templates.
//!
//! Twelve tracking and twelve functional templates are expanded into
//! variants the way copied code drifts between sites: declared identifiers
//! are renamed, whitespace is re-flowed and a few literals are edited.
//! Tracking templates share a pixel-beacon helper (and often cookie
//! helpers); functional templates share DOM helpers.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::canon::{lex, user_names, CanonError, Token, TokenKind};
use crate::corpus::{sidecar_key, Dataset, Label, Origin, ScriptRecord, Tool};
use crate::rng::SplitMix64;

pub struct Template {
    pub name: &'static str,
    pub label: Label,
    helpers: &'static [&'static str],
    body: &'static str,
}

impl Template {
    /// Helpers followed by the template body.
    pub fn source(&self) -> String {
        let mut out = String::new();
        for h in self.helpers {
            out.push_str(h);
        }
        out.push_str(self.body);
        out
    }
}

const SEND_PIXEL: &str = r#"function sendPixel(base, data) {
  var parts = [];
  for (var key in data) {
    parts.push(encodeURIComponent(key) + "=" + encodeURIComponent(data[key]));
  }
  var img = new Image(1, 1);
  img.src = base + "?" + parts.join("&") + "&cb=" + new Date().getTime();
  return img;
}
"#;

const READ_COOKIE: &str = r#"function readCookie(name) {
  var pairs = document.cookie.split(";");
  for (var i = 0; i < pairs.length; i++) {
    var pair = pairs[i].replace(/^\s+|\s+$/g, "");
    if (pair.indexOf(name + "=") == 0) {
      return decodeURIComponent(pair.substring(name.length + 1));
    }
  }
  return null;
}
"#;

const WRITE_COOKIE: &str = r#"function writeCookie(name, value, days) {
  var expires = new Date();
  expires.setTime(expires.getTime() + days * 86400000);
  document.cookie = name + "=" + encodeURIComponent(value) + "; expires=" + expires.toUTCString() + "; path=/";
}
"#;

const BY_ID: &str = r#"function byId(id) {
  return document.getElementById(id);
}
"#;

const LISTEN: &str = r#"function listen(el, type, handler) {
  if (el.addEventListener) {
    el.addEventListener(type, handler, false);
  } else {
    el.attachEvent("on" + type, handler);
  }
}
"#;

const TOGGLE_CLASS: &str = r#"function toggleClass(el, name) {
  var classes = el.className.split(" ");
  var idx = classes.indexOf(name);
  if (idx >= 0) {
    classes.splice(idx, 1);
  } else {
    classes.push(name);
  }
  el.className = classes.join(" ");
}
"#;

const T: Label = Label::Tracking;
const F: Label = Label::Functional;

pub static TEMPLATES: [Template; 24] = [
    Template {
        name: "async_loader",
        label: T,
        helpers: &[SEND_PIXEL],
        body: r#"var queue = window._tq || [];
queue.push(["_setAccount", "UA-1234-1"]);
queue.push(["_trackPageview"]);
window._tq = queue;
(function() {
  var el = document.createElement("script");
  el.type = "text/javascript";
  el.async = true;
  el.src = ("https:" == document.location.protocol ? "https://ssl" : "http://www") + ".stats.example/t.js";
  var first = document.getElementsByTagName("script")[0];
  first.parentNode.insertBefore(el, first);
})();
sendPixel("//stats.example/p.gif", {page: location.pathname, ref: document.referrer});
"#,
    },
    Template {
        name: "visitor_id",
        label: T,
        helpers: &[SEND_PIXEL, READ_COOKIE, WRITE_COOKIE],
        body: r#"var uid = readCookie("_vid");
if (!uid) {
  uid = Math.floor(Math.random() * 2147483647).toString(36) + new Date().getTime().toString(36);
  writeCookie("_vid", uid, 730);
}
var visits = parseInt(readCookie("_vcount") || "0", 10) + 1;
writeCookie("_vcount", visits, 730);
sendPixel("//collect.example/v", {uid: uid, n: visits, url: location.href});
"#,
    },
    Template {
        name: "fingerprint",
        label: T,
        helpers: &[SEND_PIXEL],
        body: r#"function fingerprint() {
  var nav = window.navigator;
  var keys = [nav.userAgent, nav.language, screen.width + "x" + screen.height, screen.colorDepth, new Date().getTimezoneOffset()];
  var plugins = [];
  for (var i = 0; i < nav.plugins.length; i++) {
    plugins.push(nav.plugins[i].name);
  }
  keys.push(plugins.join(","));
  var hash = 0;
  var text = keys.join("|");
  for (var j = 0; j < text.length; j++) {
    hash = (hash << 5) - hash + text.charCodeAt(j);
    hash = hash & hash;
  }
  return hash;
}
sendPixel("//fp.example/id", {fp: fingerprint()});
"#,
    },
    Template {
        name: "click_tracker",
        label: T,
        helpers: &[SEND_PIXEL],
        body: r#"function onClick(evt) {
  var e = evt || window.event;
  var target = e.target || e.srcElement;
  while (target && target.tagName != "A") {
    target = target.parentNode;
  }
  if (target) {
    sendPixel("//clk.example/c", {href: target.href, x: e.clientX, y: e.clientY});
  }
}
if (document.addEventListener) {
  document.addEventListener("click", onClick, false);
} else {
  document.attachEvent("onclick", onClick);
}
"#,
    },
    Template {
        name: "scroll_depth",
        label: T,
        helpers: &[SEND_PIXEL],
        body: r#"var maxDepth = 0;
var marks = [25, 50, 75, 100];
var sent = {};
function depth() {
  var top = window.pageYOffset || document.documentElement.scrollTop;
  var height = document.documentElement.scrollHeight - window.innerHeight;
  return height > 0 ? Math.round(top / height * 100) : 100;
}
window.onscroll = function() {
  var d = depth();
  if (d > maxDepth) {
    maxDepth = d;
  }
  for (var i = 0; i < marks.length; i++) {
    if (maxDepth >= marks[i] && !sent[marks[i]]) {
      sent[marks[i]] = true;
      sendPixel("//scroll.example/s", {depth: marks[i], page: location.pathname});
    }
  }
};
"#,
    },
    Template {
        name: "timing_beacon",
        label: T,
        helpers: &[SEND_PIXEL, READ_COOKIE],
        body: r#"window.onload = function() {
  var perf = window.performance;
  if (!perf || !perf.timing) {
    return;
  }
  var t = perf.timing;
  var data = {};
  data.dns = t.domainLookupEnd - t.domainLookupStart;
  data.tcp = t.connectEnd - t.connectStart;
  data.ttfb = t.responseStart - t.navigationStart;
  data.load = t.loadEventStart - t.navigationStart;
  data.uid = readCookie("_pid");
  sendPixel("//rum.example/t", data);
};
"#,
    },
    Template {
        name: "session",
        label: T,
        helpers: &[SEND_PIXEL, READ_COOKIE, WRITE_COOKIE],
        body: r#"var sessionKey = "_sess";
var session = readCookie(sessionKey);
var isNew = false;
if (session == null) {
  session = new Date().getTime() + "." + Math.floor(Math.random() * 1000000);
  isNew = true;
}
writeCookie(sessionKey, session, 0.02);
var payload = {sid: session, fresh: isNew ? 1 : 0, title: document.title};
sendPixel("//sess.example/e", payload);
"#,
    },
    Template {
        name: "referrer",
        label: T,
        helpers: &[SEND_PIXEL],
        body: r#"var ref = document.referrer;
var source = "direct";
if (ref) {
  var host = ref.split("/")[2];
  if (host.indexOf("google") >= 0 || host.indexOf("bing") >= 0) {
    source = "search";
  } else if (host != location.hostname) {
    source = "referral";
  }
}
var params = location.search.substring(1).split("&");
var campaign = {};
for (var i = 0; i < params.length; i++) {
  var kv = params[i].split("=");
  if (kv[0].indexOf("utm_") == 0) {
    campaign[kv[0]] = kv[1];
  }
}
campaign.src = source;
sendPixel("//ref.example/r", campaign);
"#,
    },
    Template {
        name: "retargeting",
        label: T,
        helpers: &[SEND_PIXEL, READ_COOKIE, WRITE_COOKIE],
        body: r#"var product = {id: "SKU-1001", price: 49.9, category: "shoes"};
var seen = readCookie("_rt_items");
var items = seen ? seen.split(",") : [];
if (items.indexOf(product.id) < 0) {
  items.push(product.id);
}
if (items.length > 10) {
  items = items.slice(items.length - 10);
}
writeCookie("_rt_items", items.join(","), 30);
sendPixel("//rt.example/view", {p: product.id, v: product.price, c: product.category, h: items.length});
"#,
    },
    Template {
        name: "form_capture",
        label: T,
        helpers: &[SEND_PIXEL, READ_COOKIE],
        body: r#"function bindForms() {
  var forms = document.getElementsByTagName("form");
  for (var i = 0; i < forms.length; i++) {
    forms[i].onsubmit = function() {
      var fields = this.elements;
      var filled = 0;
      for (var j = 0; j < fields.length; j++) {
        if (fields[j].value) {
          filled++;
        }
      }
      sendPixel("//form.example/f", {id: this.id, filled: filled, uid: readCookie("_fid")});
    };
  }
}
bindForms();
"#,
    },
    Template {
        name: "heartbeat",
        label: T,
        helpers: &[SEND_PIXEL],
        body: r#"var started = new Date().getTime();
var ticks = 0;
function heartbeat() {
  ticks++;
  var elapsed = Math.round((new Date().getTime() - started) / 1000);
  sendPixel("//hb.example/ping", {t: elapsed, n: ticks, vis: document.hidden ? 0 : 1});
  if (ticks < 20) {
    setTimeout(heartbeat, 15000);
  }
}
setTimeout(heartbeat, 15000);
"#,
    },
    Template {
        name: "ad_impressions",
        label: T,
        helpers: &[SEND_PIXEL, READ_COOKIE],
        body: r#"function trackImpressions() {
  var slots = document.querySelectorAll("[data-ad-slot]");
  var ids = [];
  for (var i = 0; i < slots.length; i++) {
    var rect = slots[i].getBoundingClientRect();
    if (rect.top < window.innerHeight && rect.bottom > 0) {
      ids.push(slots[i].getAttribute("data-ad-slot"));
    }
  }
  if (ids.length) {
    sendPixel("//ads.example/imp", {slots: ids.join(","), uid: readCookie("_aduid"), ts: new Date().getTime()});
  }
}
window.addEventListener("load", trackImpressions, false);
"#,
    },
    Template {
        name: "menu_toggle",
        label: F,
        helpers: &[BY_ID, LISTEN, TOGGLE_CLASS],
        body: r#"var menu = byId("nav-menu");
var button = byId("nav-toggle");
listen(button, "click", function(evt) {
  toggleClass(menu, "open");
  button.setAttribute("aria-expanded", menu.className.indexOf("open") >= 0 ? "true" : "false");
  if (evt.preventDefault) {
    evt.preventDefault();
  }
});
"#,
    },
    Template {
        name: "form_validation",
        label: F,
        helpers: &[BY_ID, LISTEN],
        body: r#"function validateEmail(value) {
  return /^[^@\s]+@[^@\s]+\.[a-z]{2,}$/i.test(value);
}
function validateForm(form) {
  var errors = [];
  var email = form.elements.email.value;
  if (!validateEmail(email)) {
    errors.push("Please enter a valid email address.");
  }
  var pass = form.elements.password.value;
  if (pass.length < 8) {
    errors.push("Password must be at least 8 characters.");
  }
  var box = byId("form-errors");
  box.innerHTML = errors.join("<br>");
  return errors.length == 0;
}
listen(byId("signup"), "submit", function(evt) {
  if (!validateForm(this)) {
    evt.preventDefault();
  }
});
"#,
    },
    Template {
        name: "carousel",
        label: F,
        helpers: &[BY_ID, LISTEN],
        body: r#"var slides = document.querySelectorAll(".slide");
var current = 0;
function show(index) {
  for (var i = 0; i < slides.length; i++) {
    slides[i].style.display = i == index ? "block" : "none";
  }
  current = index;
}
function next() {
  show((current + 1) % slides.length);
}
function prev() {
  show((current - 1 + slides.length) % slides.length);
}
listen(byId("next"), "click", next);
listen(byId("prev"), "click", prev);
show(0);
setInterval(next, 5000);
"#,
    },
    Template {
        name: "tabs",
        label: F,
        helpers: &[BY_ID, LISTEN],
        body: r#"var tabs = byId("tabs").getElementsByTagName("a");
function activate(tab) {
  for (var i = 0; i < tabs.length; i++) {
    var panel = byId(tabs[i].getAttribute("href").substring(1));
    if (tabs[i] === tab) {
      tabs[i].className = "active";
      panel.style.display = "";
    } else {
      tabs[i].className = "";
      panel.style.display = "none";
    }
  }
}
for (var k = 0; k < tabs.length; k++) {
  listen(tabs[k], "click", function(evt) {
    activate(this);
    evt.preventDefault();
  });
}
activate(tabs[0]);
"#,
    },
    Template {
        name: "accordion",
        label: F,
        helpers: &[TOGGLE_CLASS],
        body: r#"var headers = document.querySelectorAll(".accordion h3");
for (var i = 0; i < headers.length; i++) {
  headers[i].onclick = function() {
    var body = this.nextElementSibling;
    var open = body.style.maxHeight;
    if (open) {
      body.style.maxHeight = null;
    } else {
      body.style.maxHeight = body.scrollHeight + "px";
    }
    toggleClass(this, "expanded");
  };
}
"#,
    },
    Template {
        name: "lazy_images",
        label: F,
        helpers: &[LISTEN],
        body: r#"function inView(el) {
  var rect = el.getBoundingClientRect();
  return rect.top <= (window.innerHeight || document.documentElement.clientHeight) + 200;
}
function loadVisible() {
  var images = document.querySelectorAll("img[data-src]");
  for (var i = 0; i < images.length; i++) {
    if (inView(images[i])) {
      images[i].src = images[i].getAttribute("data-src");
      images[i].removeAttribute("data-src");
    }
  }
}
listen(window, "scroll", loadVisible);
listen(window, "resize", loadVisible);
loadVisible();
"#,
    },
    Template {
        name: "date_format",
        label: F,
        helpers: &[],
        body: r#"var months = ["Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"];
function pad(n) {
  return n < 10 ? "0" + n : "" + n;
}
function formatDate(date) {
  return date.getDate() + " " + months[date.getMonth()] + " " + date.getFullYear() + ", " + pad(date.getHours()) + ":" + pad(date.getMinutes());
}
var stamps = document.getElementsByTagName("time");
for (var i = 0; i < stamps.length; i++) {
  var when = new Date(stamps[i].getAttribute("datetime"));
  stamps[i].innerHTML = formatDate(when);
}
"#,
    },
    Template {
        name: "tooltip",
        label: F,
        helpers: &[LISTEN],
        body: r#"var tip = document.createElement("div");
tip.className = "tooltip";
document.body.appendChild(tip);
var targets = document.querySelectorAll("[title]");
for (var i = 0; i < targets.length; i++) {
  targets[i].setAttribute("data-tip", targets[i].getAttribute("title"));
  targets[i].removeAttribute("title");
  listen(targets[i], "mouseover", function() {
    var rect = this.getBoundingClientRect();
    tip.innerHTML = this.getAttribute("data-tip");
    tip.style.left = rect.left + "px";
    tip.style.top = rect.bottom + 6 + "px";
    tip.style.display = "block";
  });
  listen(targets[i], "mouseout", function() {
    tip.style.display = "none";
  });
}
"#,
    },
    Template {
        name: "modal",
        label: F,
        helpers: &[BY_ID, LISTEN],
        body: r#"var overlay = byId("modal-overlay");
var dialog = byId("modal");
function openModal(html) {
  dialog.innerHTML = html;
  overlay.style.display = "block";
  dialog.style.display = "block";
  document.body.style.overflow = "hidden";
}
function closeModal() {
  overlay.style.display = "none";
  dialog.style.display = "none";
  document.body.style.overflow = "";
}
listen(overlay, "click", closeModal);
listen(document, "keydown", function(evt) {
  if (evt.keyCode == 27) {
    closeModal();
  }
});
var links = document.querySelectorAll("a.modal-link");
for (var i = 0; i < links.length; i++) {
  listen(links[i], "click", function(evt) {
    evt.preventDefault();
    openModal(byId(this.getAttribute("data-target")).innerHTML);
  });
}
"#,
    },
    Template {
        name: "table_sort",
        label: F,
        helpers: &[LISTEN],
        body: r#"function sortTable(table, col, asc) {
  var body = table.tBodies[0];
  var rows = Array.prototype.slice.call(body.rows);
  rows.sort(function(a, b) {
    var x = a.cells[col].textContent.toLowerCase();
    var y = b.cells[col].textContent.toLowerCase();
    if (x < y) {
      return asc ? -1 : 1;
    }
    if (x > y) {
      return asc ? 1 : -1;
    }
    return 0;
  });
  for (var i = 0; i < rows.length; i++) {
    body.appendChild(rows[i]);
  }
}
var heads = document.querySelectorAll("table.sortable th");
for (var j = 0; j < heads.length; j++) {
  heads[j].setAttribute("data-col", j);
  listen(heads[j], "click", function() {
    var up = this.getAttribute("data-dir") != "asc";
    this.setAttribute("data-dir", up ? "asc" : "desc");
    sortTable(this.parentNode.parentNode.parentNode, parseInt(this.getAttribute("data-col"), 10), up);
  });
}
"#,
    },
    Template {
        name: "countdown",
        label: F,
        helpers: &[BY_ID],
        body: r#"var deadline = new Date(2030, 0, 1).getTime();
var display = byId("countdown");
function tick() {
  var left = deadline - new Date().getTime();
  if (left <= 0) {
    display.innerHTML = "Expired";
    clearInterval(timer);
    return;
  }
  var days = Math.floor(left / 86400000);
  var hours = Math.floor(left % 86400000 / 3600000);
  var mins = Math.floor(left % 3600000 / 60000);
  display.innerHTML = days + "d " + hours + "h " + mins + "m";
}
var timer = setInterval(tick, 1000);
tick();
"#,
    },
    Template {
        name: "search_filter",
        label: F,
        helpers: &[BY_ID, LISTEN],
        body: r#"var input = byId("filter");
var items = byId("list").getElementsByTagName("li");
function applyFilter() {
  var term = input.value.toLowerCase();
  var shown = 0;
  for (var i = 0; i < items.length; i++) {
    var match = items[i].textContent.toLowerCase().indexOf(term) >= 0;
    items[i].style.display = match ? "" : "none";
    if (match) {
      shown++;
    }
  }
  byId("count").innerHTML = shown + " results";
}
listen(input, "keyup", applyFilter);
applyFilter();
"#,
    },
];

pub fn templates(label: Label) -> impl Iterator<Item = &'static Template> {
    TEMPLATES.iter().filter(move |t| t.label == label)
}

// ---- mutations ----

/// A fresh identifier in one of three styles (minifier, hex, syllables).
fn fresh_name(rng: &mut SplitMix64, style: usize, taken: &HashSet<String>) -> String {
    const LETTERS: &[u8] = b"abcdefghijklmnopqrstuvwxyz";
    const SYLLABLES: &[&str] = &["ka", "lo", "mi", "ne", "ru", "ta", "vo", "xe", "zi", "po", "gu", "sa"];
    loop {
        let name = match style {
            0 => {
                let len = 1 + rng.below(2);
                (0..len).map(|_| LETTERS[rng.below(LETTERS.len())] as char).collect()
            }
            1 => format!("_0x{:04x}", rng.below(0x10000)),
            _ => {
                let n = 2 + rng.below(2);
                (0..n).map(|_| *rng.pick(SYLLABLES)).collect::<String>()
            }
        };
        if !taken.contains(&name) && !crate::canon::lexer::KEYWORDS.contains(&name.as_str()) {
            return name;
        }
    }
}

/// Object-literal key position: `{ name :` or `, name :`.
fn is_object_key(tokens: &[Token], i: usize) -> bool {
    i > 0
        && (tokens[i - 1].is_punct("{") || tokens[i - 1].is_punct(","))
        && tokens.get(i + 1).is_some_and(|t| t.is_punct(":"))
}

/// Consistently rename every identifier the program declares or assigns.
/// Property names and free (host) names are left alone.
pub fn rename_identifiers(source: &str, rng: &mut SplitMix64) -> Result<String, CanonError> {
    let tokens = lex(source)?;
    let user = user_names(source)?;
    let mut taken: HashSet<String> = tokens
        .iter()
        .filter(|t| t.kind == TokenKind::Identifier)
        .map(|t| t.text.clone())
        .collect();
    let style = rng.below(3);
    let mut map = std::collections::HashMap::new();
    for name in &user {
        let fresh = fresh_name(rng, style, &taken);
        taken.insert(fresh.clone());
        map.insert(name.as_str(), fresh);
    }
    let mut out = tokens.clone();
    for (i, t) in tokens.iter().enumerate() {
        if t.kind != TokenKind::Identifier {
            continue;
        }
        let after_dot = i > 0 && (tokens[i - 1].is_punct(".") || tokens[i - 1].is_punct("?."));
        if after_dot || is_object_key(&tokens, i) {
            continue;
        }
        if let Some(n) = map.get(t.text.as_str()) {
            out[i].text = n.clone();
        }
    }
    Ok(join_preserving_lines(&tokens, &out))
}

/// Re-emit tokens with the original line structure and single spaces.
fn join_preserving_lines(orig: &[Token], toks: &[Token]) -> String {
    let mut s = String::new();
    for (i, t) in toks.iter().enumerate() {
        if i > 0 {
            s.push(if orig[i].line > orig[i - 1].end_line() { '\n' } else { ' ' });
        }
        s.push_str(&t.text);
    }
    s.push('\n');
    s
}

const TIGHT: &[&str] = &[";", ",", "{", "}", "(", ")", "[", "]"];

/// Re-flow whitespace. Line breaks are added only after `;`, `{`, `}` or
/// `,`, and an original break is dropped only where automatic semicolon
/// insertion cannot depend on it.
pub fn mangle_whitespace(source: &str, rng: &mut SplitMix64) -> Result<String, CanonError> {
    let tokens = lex(source)?;
    let mut s = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            let prev = &tokens[i - 1];
            let had_break = t.line > prev.end_line();
            let break_ok = [";", "{", "}", ","].iter().any(|p| prev.is_punct(p));
            let may_drop = [";", "{", ","].iter().any(|p| prev.is_punct(p)) || t.is_punct("}");
            let tight_ok = TIGHT.iter().any(|p| prev.is_punct(p) || t.is_punct(p));
            if had_break && !may_drop {
                s.push('\n');
            } else if break_ok && rng.chance(0.3) {
                s.push('\n');
                s.push_str(&" ".repeat(rng.below(5)));
            } else if tight_ok && rng.chance(0.6) {
                // no separator
            } else {
                s.push_str(if rng.chance(0.15) { "  " } else { " " });
            }
        }
        s.push_str(&t.text);
    }
    s.push('\n');
    Ok(s)
}

/// Replace up to `k` number or string literals with random values.
pub fn edit_literals(source: &str, k: usize, rng: &mut SplitMix64) -> Result<String, CanonError> {
    let tokens = lex(source)?;
    let mut idx: Vec<usize> = (0..tokens.len())
        .filter(|&i| matches!(tokens[i].kind, TokenKind::Number | TokenKind::String))
        .collect();
    rng.shuffle(&mut idx);
    let mut out = tokens.clone();
    for &i in idx.iter().take(k) {
        let t = &mut out[i];
        if t.kind == TokenKind::Number {
            t.text = rng.below(100_000).to_string();
        } else {
            let q = t.text.chars().next().unwrap_or('"');
            let len = 3 + rng.below(6);
            let word: String = (0..len).map(|_| (b'a' + rng.below(26) as u8) as char).collect();
            t.text = format!("{q}{word}{q}");
        }
    }
    Ok(join_preserving_lines(&tokens, &out))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mutation {
    pub rename: bool,
    pub whitespace: bool,
    pub literal_edits: usize,
}

impl Mutation {
    /// Renaming and re-flowing only: canonical form must not change.
    pub const OBFUSCATE: Mutation = Mutation {
        rename: true,
        whitespace: true,
        literal_edits: 0,
    };
}

pub fn mutate(source: &str, m: Mutation, rng: &mut SplitMix64) -> Result<String, CanonError> {
    let mut s = source.to_string();
    if m.literal_edits > 0 {
        s = edit_literals(&s, m.literal_edits, rng)?;
    }
    if m.rename {
        s = rename_identifiers(&s, rng)?;
    }
    if m.whitespace {
        s = mangle_whitespace(&s, rng)?;
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    /// Total scripts, split evenly between the two classes.
    pub size: usize,
    pub seed: u64,
    /// Probability that a variant also gets literal edits.
    pub edit_rate: f64,
    /// Literal edits per edited variant, drawn from `1..=max`.
    pub max_literal_edits: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            size: 400,
            seed: 0,
            edit_rate: 0.25,
            max_literal_edits: 2,
        }
    }
}

/// Labelled corpus of mutated template variants. Record ids are
/// `synth/<template>/<k>`; the first variant of each template is unmutated.
pub fn synth_corpus(cfg: &SynthConfig) -> crate::Result<Dataset> {
    let mut rng = SplitMix64::new(cfg.seed);
    let mut records = Vec::with_capacity(cfg.size);
    for (class, n) in [(Label::Tracking, cfg.size.div_ceil(2)), (Label::Functional, cfg.size / 2)] {
        let ts: Vec<&Template> = templates(class).collect();
        for k in 0..n {
            let t = ts[k % ts.len()];
            let variant = k / ts.len();
            let base = t.source();
            let mut vr = rng.fork();
            let source = if variant == 0 {
                base
            } else {
                let edits = if vr.chance(cfg.edit_rate) {
                    1 + vr.below(cfg.max_literal_edits.max(1))
                } else {
                    0
                };
                let m = Mutation {
                    literal_edits: edits,
                    ..Mutation::OBFUSCATE
                };
                mutate(&base, m, &mut vr)?
            };
            records.push(ScriptRecord {
                id: format!("synth/{}/{variant}", t.name),
                source,
                origin: Origin::External,
                page_id: None,
                tool: Tool::Off,
                url: Some(format!("https://synth.invalid/{}/{variant}.js", t.name)),
                label: Some(class),
                label_rule: None,
            });
        }
    }
    Ok(Dataset::new(records, Vec::new())?)
}

/// Page snapshots of the synthetic corpus, with and without a simulated
/// blocker.
#[derive(Debug, Clone, PartialEq)]
pub struct BundleConfig {
    pub corpus: SynthConfig,
    pub pages: usize,
    /// Probability that the blocker lets a tracking script through.
    pub miss_rate: f64,
    /// Probability that it blocks a functional one.
    pub false_block_rate: f64,
}

impl Default for BundleConfig {
    fn default() -> Self {
        BundleConfig {
            corpus: SynthConfig::default(),
            pages: 20,
            miss_rate: 0.1,
            false_block_rate: 0.05,
        }
    }
}

/// Marker carried by every surrogate stub the simulated blocker injects.
pub const SURROGATE_MARKER: &str = "jstrack-surrogate";

/// Write a snapshot bundle under `root`:
///
/// * `pages/<page>/off/index.html`, tracking scripts external (bodies in
///   `ext/`), functional ones in-page;
/// * `pages/<page>/AP/index.html`, what survives the simulated blocker,
///   plus a surrogate stub on every other page;
/// * `labels.tsv` (`identity<TAB>label`), `surrogates.txt`, and
///   `tool_AP.tsv` with the blocker outcome per off-snapshot record id.
pub fn write_bundle(root: &Path, cfg: &BundleConfig) -> crate::Result<()> {
    let corpus = synth_corpus(&cfg.corpus)?;
    let pages = cfg.pages.max(1);
    let mut rng = SplitMix64::new(cfg.corpus.seed ^ 0x5eed_b10c);
    let (mut labels, mut outcomes) = (String::new(), String::new());
    let stub = format!("/* {SURROGATE_MARKER} */ window.ga = function () {{}};");
    for p in 0..pages {
        let page = format!("p{p:03}");
        let dir = root.join("pages").join(&page);
        let (mut off, mut on) = (String::from("<html><head>\n"), String::from("<html><head>\n"));
        let mine = corpus.records.iter().enumerate().filter(|(i, _)| i % pages == p);
        for (k, (_, r)) in mine.enumerate() {
            let tracking = r.label == Some(Label::Tracking);
            let tag = if tracking {
                let url = r.url.clone().unwrap_or_default();
                for tool in ["off", "AP"] {
                    let ext = dir.join(tool).join("ext");
                    fs::create_dir_all(&ext)?;
                    fs::write(ext.join(format!("{}.js", sidecar_key(&url))), &r.source)?;
                }
                format!("<script src=\"{url}\"></script>\n")
            } else {
                format!("<script>\n{}\n</script>\n", r.source)
            };
            let blocked = if tracking {
                !rng.chance(cfg.miss_rate)
            } else {
                rng.chance(cfg.false_block_rate)
            };
            off.push_str(&tag);
            if !blocked {
                on.push_str(&tag);
            }
            let id = ScriptRecord {
                origin: if tracking { Origin::External } else { Origin::InPage },
                source: format!("\n{}\n", r.source),
                ..r.clone()
            }
            .identity();
            let _ = writeln!(labels, "{id}\t{}", r.label.unwrap_or(Label::Functional));
            let outcome = if blocked { Label::Tracking } else { Label::Functional };
            let _ = writeln!(outcomes, "{page}/off/{k}\t{outcome}");
        }
        if p % 2 == 0 {
            let _ = writeln!(on, "<script>{stub}</script>");
        }
        for (tool, html) in [("off", off), ("AP", on)] {
            fs::create_dir_all(dir.join(tool))?;
            fs::write(dir.join(tool).join("index.html"), html + "</head></html>\n")?;
        }
    }
    fs::write(root.join("labels.tsv"), labels)?;
    fs::write(root.join("tool_AP.tsv"), outcomes)?;
    fs::write(root.join("surrogates.txt"), format!("pattern:{SURROGATE_MARKER}\n"))?;
    Ok(())
}
